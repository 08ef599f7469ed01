//! The four standard figures for a simulated trace.

use adalloc::scenario::{Scenario, ScenarioTrace};
use adalloc::Result;

use crate::svg::{chart, Panel, Series};

/// `(file name, svg document)` pairs.
pub fn figures(trace: &ScenarioTrace, scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let t: Vec<f64> = trace.rows.iter().map(|r| r.t).collect();
    let plant = &scenario.plant;
    let c = plant.c();
    let column = |f: &dyn Fn(&adalloc::scenario::TraceRow) -> f64| -> Vec<f64> {
        trace.rows.iter().map(f).collect()
    };

    let mut output_panels = Vec::new();
    for i in 0..plant.r() {
        let row = c.row(i);
        let unit = row
            .iter()
            .position(|x| *x == 1.0)
            .filter(|_| row.iter().filter(|x| **x != 0.0).count() == 1);
        let name = unit.map_or_else(|| format!("y{}", i + 1), |j| trace.state_labels[j].clone());
        let y = column(&|r| r.x.iter().zip(row).map(|(x, c)| x * c).sum());
        let mut reference = Vec::with_capacity(t.len());
        for time in &t {
            reference.push(scenario.reference_at(*time)?.get(i, 0));
        }
        output_panels.push(Panel {
            title: format!("{name} and reference"),
            series: vec![
                Series::solid(name.clone(), y),
                Series::dashed(format!("{name} ref"), reference),
            ],
        });
    }
    output_panels.push(Panel {
        title: "all states".into(),
        series: trace
            .state_labels
            .iter()
            .enumerate()
            .map(|(j, label)| Series::solid(label.clone(), column(&|r| r.x[j])))
            .collect(),
    });

    let inputs = vec![Panel {
        title: "actuator commands".into(),
        series: trace
            .input_labels
            .iter()
            .enumerate()
            .map(|(j, label)| Series::solid(label.clone(), column(&|r| r.u[j])))
            .collect(),
    }];

    let moments = (0..trace.r)
        .map(|i| Panel {
            title: format!("virtual command {} and achieved moment", i + 1),
            series: vec![
                Series::solid(format!("v{}", i + 1), column(&|r| r.v[i])),
                Series::dashed(format!("BΛu {}", i + 1), column(&|r| r.measured[i])),
            ],
        })
        .collect::<Vec<_>>();

    let m = trace.m();
    let theta = vec![Panel {
        title: "parameter entries".into(),
        series: (0..trace.r * m)
            .map(|idx| {
                Series::solid(
                    format!("θ {},{}", idx / m + 1, idx % m + 1),
                    column(&|r| r.theta[idx]),
                )
            })
            .collect(),
    }];

    Ok(vec![
        (
            "states.svg",
            chart("Outputs and references", &t, &output_panels),
        ),
        ("inputs.svg", chart("Actuator commands", &t, &inputs)),
        (
            "moments.svg",
            chart("Commanded and achieved moments", &t, &moments),
        ),
        ("theta.svg", chart("Adaptive parameters", &t, &theta)),
    ])
}
