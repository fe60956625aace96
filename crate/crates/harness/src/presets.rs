//! Named experiment specifications for the published figure scenarios.

use crate::error::{spec_err, Result};
use crate::spec::ExperimentSpec;

const COMMON: &str = "\
b = 1
noise_dbm = -120
pathloss.c_ris_db = -60
pathloss.c_direct_db = -30
pathloss.alpha_br = 2
pathloss.alpha_ru = 2
pathloss.alpha_bu = 3.5
geometry.bs = 0, 0
geometry.ris = 50, 2
geometry.ue_center = 50, 0
ats.Q = 15
ats.I_T = 40
ats.H_size = 1
nece.I_N = 15
nece.C = 200
nece.C_pr = 40
drops = 100
";

const FIG4: &str = "\
name = fig4
M = 4
N = 8
N_s = 16
K = 2
sweep.power_dbm = 0:5:20
baselines = regular-nece, irregular-nece, regular-sr, irregular-sr, exhaustive
";

const FIG5: &str = "\
name = fig5
M = 4
N = 32
N_s = 64
K = 4
grid = 8x8
power_dbm = 10
drops = 1
baselines = irregular-nece
topologies = true
";

const FIG6: &str = "\
name = fig6
M = 4
N = 32
N_s = 64
K = 4
sweep.power_dbm = 0:5:20
baselines = regular-nece, irregular-nece, regular-sr, irregular-sr
";

const FIG7: &str = "\
name = fig7
M = 4
N = 20
K = 4
N_s = 20
power_dbm = 10
sweep.N_s = 20, 40, 60, 80
baselines = regular-nece, irregular-nece
";

const FIG8: &str = "\
name = fig8
M = 4
N = 20
N_s = 120
K = 4
power_dbm = 10
sweep.N = 20, 40, 60, 80
baselines = regular-nece, irregular-nece
";

const FIG9: &str = "\
name = fig9
M = 4
N = 32
N_s = 64
K = 4
power_dbm = 10
sweep.mu_db = 0:5:20
baselines = regular-nece, irregular-nece, regular-sr, irregular-sr
";

pub const NAMES: [&str; 6] = ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

/// Spec text of a preset.
pub fn preset_text(name: &str) -> Result<String> {
    let body = match name {
        "fig4" => FIG4,
        "fig5" => FIG5,
        "fig6" => FIG6,
        "fig7" => FIG7,
        "fig8" => FIG8,
        "fig9" => FIG9,
        _ => return Err(spec_err("preset", format!("unknown preset `{name}`, expected one of {NAMES:?}"))),
    };
    // preset lines override the shared defaults
    let mut text = String::new();
    for line in COMMON.lines() {
        let key = line.split('=').next().unwrap_or("").trim();
        if !body.lines().any(|l| l.split('=').next().unwrap_or("").trim() == key) {
            text.push_str(line);
            text.push('\n');
        }
    }
    text.push_str(body);
    Ok(text)
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    ExperimentSpec::parse(&preset_text(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Baseline, Sweep};

    #[test]
    fn all_presets_parse() {
        for name in NAMES {
            let spec = preset(name).unwrap();
            assert_eq!(spec.name, name);
            assert_eq!(spec.scenario.ats.neighbors, 15);
            assert_eq!(spec.scenario.nece.candidates, 200);
        }
        assert!(preset("fig10").is_err());
    }

    #[test]
    fn captions() {
        let s = preset("fig4").unwrap();
        assert_eq!((s.scenario.antennas, s.scenario.elements, s.scenario.grid_points, s.scenario.users), (4, 8, 16, 2));
        assert_eq!(s.drops, 100);
        assert!(s.baselines.contains(&Baseline::Exhaustive));
        let s = preset("fig7").unwrap();
        assert_eq!(s.sweep, Sweep::GridPoints(vec![20, 40, 60, 80]));
        assert!((s.scenario.max_power - 0.01).abs() < 1e-15);
        let s = preset("fig5").unwrap();
        assert_eq!(s.drops, 1);
        assert_eq!(s.scenario.grid_shape, Some((8, 8)));
        assert!(preset("fig9").unwrap().sweep.minimizes_power());
    }
}
