use serde::{Deserialize, Serialize};

use super::{alphas_coincide, BifurcationCoefficients, FoldFoldPoint};
use crate::psys::{PiecewiseSystem, Region};

/// One hypothesis with its evaluated left-hand side. `holds` is `None` when
/// the left-hand side is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: Option<bool>,
    pub lhs: Option<f64>,
}

impl Condition {
    fn negative(lhs: f64) -> Self {
        Condition { holds: Some(lhs < 0.0), lhs: Some(lhs) }
    }

    fn undefined() -> Self {
        Condition { holds: None, lhs: None }
    }

    pub fn passed(&self) -> bool {
        self.holds == Some(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableBranch {
    /// The fixed point with z below z0.
    Lower,
    Upper,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub cond_as3: Condition,
    pub cond_as4: Condition,
    pub cond_stab: Condition,
    pub cond_timemap: Condition,
    pub cond_dir1: Condition,
    pub cond_dir2: Condition,
    pub applicable: bool,
    pub stable_branch: StableBranch,
    pub notes: Vec<String>,
}

impl TheoremVerdict {
    pub fn conditions(&self) -> [(&'static str, &Condition); 6] {
        [
            ("as3", &self.cond_as3),
            ("as4", &self.cond_as4),
            ("stab", &self.cond_stab),
            ("timemap", &self.cond_timemap),
            ("dir1", &self.cond_dir1),
            ("dir2", &self.cond_dir2),
        ]
    }

    /// Conditions evaluated and found false.
    pub fn failed(&self) -> Vec<&'static str> {
        self.conditions().into_iter().filter(|(_, c)| c.holds == Some(false)).map(|(n, _)| n).collect()
    }

    /// Conditions that could not be evaluated.
    pub fn undefined(&self) -> Vec<&'static str> {
        self.conditions().into_iter().filter(|(_, c)| c.holds.is_none()).map(|(n, _)| n).collect()
    }
}

pub fn check_theorem(sys: &PiecewiseSystem, p: &FoldFoldPoint, c: &BifurcationCoefficients) -> TheoremVerdict {
    let (am, ap) = (c.minus.alpha_bar, c.plus.alpha_bar);
    let cond_as3 = Condition {
        holds: Some(!alphas_coincide(am, ap)),
        lhs: Some(am - ap),
    };
    let cond_as4 = match (c.big_k, c.big_m) {
        (Some(k), Some(m)) => Condition::negative(k * m),
        _ => Condition::undefined(),
    };
    let (hm, hp) = (c.minus.h0, c.plus.h0);
    let cond_stab = Condition::negative(hp * (c.plus.eta_bar - c.minus.eta_bar));
    let cond_timemap = Condition::negative(hp * hm);

    let surf = sys.surface();
    let (a, b) = (surf.a(), surf.b());
    let gy = sys.parts().g_jet(p.x0, p.y0).dy;
    let dir = |r: Region| {
        let hj = sys.parts().h_jet(r, p.y0, p.z0);
        b * hp * (gy - b / (a + b) * hj.dy - hj.dz)
    };
    let cond_dir1 = Condition::negative(dir(Region::Plus));
    let cond_dir2 = Condition::negative(dir(Region::Minus));

    let pattern_a = hp * c.plus.a - hm * c.minus.a;
    let pattern_eta = hp * c.plus.eta - hm * c.minus.eta;
    let stable_branch = if pattern_a < 0.0 && pattern_eta < 0.0 {
        StableBranch::Lower
    } else if pattern_a > 0.0 && pattern_eta > 0.0 {
        StableBranch::Upper
    } else {
        StableBranch::Indeterminate
    };

    let mut notes = vec!["k_tilde evaluated with g^i(0) in place of the g-tilde term".to_string()];
    let branch_known = stable_branch != StableBranch::Indeterminate;
    if cond_stab.passed() != branch_known {
        notes.push(format!(
            "stability forms disagree: h+(eta_bar+ - eta_bar-) = {:e} but sign pattern (h+A+ - h-A-, h+eta+ - h-eta-) = ({pattern_a:e}, {pattern_eta:e})",
            cond_stab.lhs.unwrap_or(f64::NAN)
        ));
    }
    if cond_as4.holds.is_none() {
        notes.push("K and M undefined because alpha_bar- = alpha_bar+".into());
    }

    let mut verdict = TheoremVerdict {
        cond_as3,
        cond_as4,
        cond_stab,
        cond_timemap,
        cond_dir1,
        cond_dir2,
        applicable: false,
        stable_branch,
        notes,
    };
    verdict.applicable = verdict.conditions().iter().all(|(_, c)| c.passed());
    verdict
}
