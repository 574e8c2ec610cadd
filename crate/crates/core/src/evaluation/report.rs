//! LP/SQL tables over several priors and mechanisms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::MechanismMatrix;

use super::metrics::{lp, sql};
use super::world::{Prior, RegionWorld};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub prior: String,
    pub mechanism: String,
    pub lp_km: f64,
    pub sql_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub priors: Vec<String>,
    pub mechanisms: Vec<String>,
    pub rows: Vec<EvaluationRow>,
}

pub fn evaluate(
    world: &RegionWorld,
    priors: &[(String, Prior)],
    mechanisms: &[(String, MechanismMatrix)],
) -> Result<EvaluationTable> {
    let mut rows = Vec::with_capacity(priors.len() * mechanisms.len());
    for (pname, prior) in priors {
        for (mname, k) in mechanisms {
            rows.push(EvaluationRow {
                prior: pname.clone(),
                mechanism: mname.clone(),
                lp_km: lp(prior, k, world)?.lp,
                sql_km: sql(prior, k, world)?,
            });
        }
    }
    Ok(EvaluationTable {
        priors: priors.iter().map(|p| p.0.clone()).collect(),
        mechanisms: mechanisms.iter().map(|m| m.0.clone()).collect(),
        rows,
    })
}

impl EvaluationTable {
    pub fn get(&self, prior: &str, mechanism: &str) -> Option<&EvaluationRow> {
        self.rows
            .iter()
            .find(|r| r.prior == prior && r.mechanism == mechanism)
    }

    /// One line per prior, one LP column (metres) per mechanism.
    pub fn write_wide_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "prior")?;
        for m in &self.mechanisms {
            write!(w, ",{m}")?;
        }
        writeln!(w)?;
        for p in &self.priors {
            write!(w, "{p}")?;
            for m in &self.mechanisms {
                let v = self.get(p, m).map(|r| r.lp_km * 1000.0).unwrap_or(f64::NAN);
                write!(w, ",{v:.2}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_long_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "prior,mechanism,lp_m,sql_m,lp_km,sql_km")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{:.2},{:.2},{},{}",
                r.prior,
                r.mechanism,
                r.lp_km * 1000.0,
                r.sql_km * 1000.0,
                r.lp_km,
                r.sql_km
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_and_long_layouts() {
        let w = RegionWorld::new(1, 2, 1.0, None).unwrap();
        let priors = vec![("u".to_string(), Prior::uniform(2).unwrap())];
        let mechs = vec![
            ("id".to_string(), MechanismMatrix::identity(2)),
            ("swap".to_string(), MechanismMatrix::deterministic(&[1, 0], 2).unwrap()),
        ];
        let t = evaluate(&w, &priors, &mechs).unwrap();
        let mut wide = Vec::new();
        t.write_wide_csv(&mut wide).unwrap();
        assert_eq!(String::from_utf8(wide).unwrap(), "prior,id,swap\nu,0.00,0.00\n");
        let mut long = Vec::new();
        t.write_long_csv(&mut long).unwrap();
        let long = String::from_utf8(long).unwrap();
        assert!(long.contains("u,swap,0.00,1000.00,0,1\n"), "{long}");
    }
}
