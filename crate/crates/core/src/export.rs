//! Plot-ready CSV/JSON emission. Everything is rendered to strings with
//! shortest round-trip float formatting, so identical inputs give
//! byte-identical files.

use serde_json::json;

use crate::abm::AgentSummary;
use crate::game::ClassifyOptions;
use crate::meanfield::{Landscape, TrajectoryPoint};
use crate::metrics::MetricsRecord;
use crate::sensitivity::{BootstrapResult, SobolIndices, SweepJobRecord, SweepSpec};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Game-space grid: U,V,Z,class_label.
pub fn game_grid_csv(grid: &crate::meanfield::GridSpec, classify: ClassifyOptions) -> String {
    let mut out = String::from("U,V,Z,class_label\n");
    for iu in 0..grid.nu {
        for iv in 0..grid.nv {
            let g = grid.game(iu, iv);
            out.push_str(&format!(
                "{},{},{},{}\n",
                g.u,
                g.v,
                g.zero_sumness(),
                g.classify(classify).label()
            ));
        }
    }
    out
}

/// Landscape grid: U,V,S,Phi,gradU,gradV.
pub fn landscape_csv(landscape: &Landscape) -> String {
    let grid = &landscape.grid;
    let mut out = String::from("U,V,S,Phi,gradU,gradV\n");
    for iu in 0..grid.nu {
        for iv in 0..grid.nv {
            let idx = grid.index(iu, iv);
            let g = grid.game(iu, iv);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                g.u,
                g.v,
                landscape.s[idx],
                landscape.phi[idx],
                landscape.gradient[idx][0],
                landscape.gradient[idx][1]
            ));
        }
    }
    out
}

/// Attractor list as a JSON array of {U,V,phi,class,Z}.
pub fn attractors_json(landscape: &Landscape) -> String {
    let entries: Vec<_> = landscape
        .attractors
        .iter()
        .map(|a| {
            json!({
                "U": a.game.u,
                "V": a.game.v,
                "phi": a.phi,
                "class": a.class.label(),
                "Z": a.z,
            })
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("serializable") + "\n"
}

/// Parameter-loop trajectory CSV.
pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let mut out = String::from("mu_eta,mu_lambda,attractor_U,attractor_V,class,perceived_U,perceived_V\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.mu_eta,
            p.mu_lambda,
            p.attractor.game.u,
            p.attractor.game.v,
            p.attractor.class.label(),
            p.perceived.u,
            p.perceived.v
        ));
    }
    out
}

/// Per-period ABM metrics CSV.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(
        "period,replicate,mean_income,gini,sen_welfare,coop_rate,mean_Z,mean_U,mean_V,mean_degree,clustering\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.period,
            r.replicate,
            r.mean_income,
            r.gini,
            r.sen_welfare,
            opt(r.coop_rate),
            r.mean_z,
            r.mean_u,
            r.mean_v,
            r.mean_degree,
            r.clustering
        ));
    }
    out
}

/// Final agent dump CSV.
pub fn agents_csv(replicate: usize, agents: &[AgentSummary]) -> String {
    let mut out = String::from("replicate,id,eta,lambda,omega,U,V,W,W_R,degree\n");
    for a in agents {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            replicate, a.id, a.eta, a.lambda, a.omega, a.u, a.v, a.wealth, a.recent_wealth, a.degree
        ));
    }
    out
}

/// Sweep results CSV: row id, parameter values, replicate, outputs.
pub fn sweep_results_csv(
    spec: &SweepSpec,
    design: &[Vec<f64>],
    records: &[SweepJobRecord],
) -> String {
    let mut out = String::from("row");
    for p in &spec.parameters {
        out.push(',');
        out.push_str(&p.name);
    }
    out.push_str(",replicate,gini,recent_wealth,zerosumness\n");
    for r in records {
        out.push_str(&r.row.to_string());
        for v in &design[r.row] {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(&format!(
            ",{},{},{},{}\n",
            r.replicate, r.outputs.gini, r.outputs.recent_wealth, r.outputs.zerosumness
        ));
    }
    out
}

/// Index report for one output: clipped values for reading, raw values
/// for diagnostics, bootstrap intervals when available.
pub fn indices_entry(
    spec: &SweepSpec,
    indices: Option<&SobolIndices>,
    ci: Option<&BootstrapResult>,
) -> serde_json::Value {
    match indices {
        None => json!(null),
        Some(idx) => {
            let clip = |x: f64| x.clamp(0.0, 1.0);
            let rows: Vec<_> = spec
                .parameters
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    json!({
                        "parameter": p.name,
                        "S1": clip(idx.s1[i]),
                        "S1_raw": idx.s1[i],
                        "S1_CI": ci.map(|c| json!([c.s1[i].lo, c.s1[i].hi])),
                        "ST": clip(idx.st[i]),
                        "ST_raw": idx.st[i],
                        "ST_CI": ci.map(|c| json!([c.st[i].lo, c.st[i].hi])),
                    })
                })
                .collect();
            json!(rows)
        }
    }
}

/// Full indices JSON keyed by output name.
pub fn indices_json(
    spec: &SweepSpec,
    per_output: &[(String, Option<SobolIndices>, Option<BootstrapResult>)],
) -> String {
    let mut map = serde_json::Map::new();
    for (name, idx, ci) in per_output {
        map.insert(name.clone(), indices_entry(spec, idx.as_ref(), ci.as_ref()));
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::GridSpec;

    #[test]
    fn game_grid_csv_shape_and_labels() {
        let grid = GridSpec::with_resolution(4);
        let csv = game_grid_csv(&grid, ClassifyOptions::default());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "U,V,Z,class_label");
        assert!(lines[1].starts_with("-1,-1,-1,"));
        assert!(csv.contains(",PD\n") || csv.contains(",UNCLASSIFIED\n"));
    }

    #[test]
    fn metrics_csv_missing_cells_are_empty() {
        let record = MetricsRecord {
            period: 0,
            replicate: 1,
            mean_income: 0.5,
            gini: 0.1,
            sen_welfare: 0.45,
            coop_rate: None,
            mean_z: -0.2,
            mean_u: 0.4,
            mean_v: 0.6,
            mean_degree: 4.0,
            clustering: 0.3,
            corr_lambda_wealth: None,
            corr_eta_wealth: None,
            corr_lambda_income: None,
            corr_eta_income: None,
        };
        let csv = metrics_csv(&[record]);
        assert!(csv.lines().nth(1).unwrap().contains(",0.45,,-0.2,"));
    }

    #[test]
    fn grid_game_export_deterministic() {
        let grid = GridSpec::with_resolution(5);
        assert_eq!(
            game_grid_csv(&grid, ClassifyOptions::default()),
            game_grid_csv(&grid, ClassifyOptions::default())
        );
    }

    #[test]
    fn perceived_game_outside_box_still_serializes() {
        let g = crate::game::Game::new(-1.0, 2.0);
        let model = crate::utility::UtilityModel::linex(1.4).unwrap();
        let p = g.perceived(&model).unwrap();
        assert!(p.u < -1.0);
        let s = format!("{},{}", p.u, p.v);
        assert!(s.contains('-'));
    }
}
