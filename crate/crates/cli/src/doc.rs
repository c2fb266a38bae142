//! JSON document formats: system descriptions in, verdicts and couplings
//! out. All probabilities travel as exact rational strings ("3/7", "0.25");
//! output maps are ordered, so identical inputs serialize byte-identically.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cbd_core::coupling::{CoupledVar, Coupling};
use cbd_core::decide::Verdict;
use cbd_core::model::{
    AtomDecl, ContentDecl, ContextDecl, System, SystemSpec, ValueSpace,
};
use cbd_core::rational::Rational;
use cbd_core::split::SplitPlan;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct SystemDocument {
    pub contents: Vec<ContentDoc>,
    pub contexts: Vec<ContextDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContentDoc {
    pub id: String,
    /// "categorical" or "ordered".
    pub kind: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vicinities: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContextDoc {
    pub id: String,
    pub measures: Vec<String>,
    pub atoms: Vec<AtomDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AtomDoc {
    pub values: Vec<String>,
    pub prob: String,
}

impl SystemDocument {
    pub fn to_spec(&self) -> Result<SystemSpec> {
        let contents = self
            .contents
            .iter()
            .map(|c| {
                let space = match c.kind.as_str() {
                    "categorical" => ValueSpace::categorical(c.labels.clone()),
                    "ordered" => ValueSpace::ordered(c.labels.clone()),
                    other => bail!(
                        "content `{}`: unknown kind `{other}` (expected `categorical` or `ordered`)",
                        c.id
                    ),
                };
                let space = match &c.vicinities {
                    Some(vs) => space.with_vicinities(
                        vs.iter()
                            .map(|v| v.iter().map(String::as_str).collect())
                            .collect(),
                    ),
                    None => space,
                };
                Ok(ContentDecl {
                    id: c.id.clone(),
                    space,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let contexts = self
            .contexts
            .iter()
            .map(|ctx| {
                let atoms = ctx
                    .atoms
                    .iter()
                    .map(|a| {
                        let prob: Rational = a.prob.parse().with_context(|| {
                            format!("context `{}`: bad probability `{}`", ctx.id, a.prob)
                        })?;
                        Ok(AtomDecl {
                            values: a.values.clone(),
                            prob,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ContextDecl {
                    id: ctx.id.clone(),
                    measures: ctx.measures.clone(),
                    atoms,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SystemSpec { contents, contexts })
    }
}

/// Reads, parses, and validates a system document.
pub fn load_system(path: &Path) -> Result<System> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    let doc: SystemDocument = serde_json::from_str(&text)
        .with_context(|| format!("`{}` is not a valid system document", path.display()))?;
    let spec = doc.to_spec()?;
    System::validate(spec).map_err(|e| anyhow::Error::new(e).context("invalid system"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub tool: String,
    /// Which (non)contextuality notion was decided.
    pub notion: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramDoc>,
    /// Least total constraint violation; "0" exactly when feasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<CouplingDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanDoc {
    pub policy: String,
    /// Dichotomizations per content.
    pub dichotomizations: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProgramDoc {
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CouplingDoc {
    pub vars: Vec<VarDoc>,
    pub atoms: Vec<CouplingAtomDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VarDoc {
    pub id: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CouplingAtomDoc {
    /// Variable id -> value label.
    pub values: BTreeMap<String, String>,
    pub prob: String,
}

impl CouplingDoc {
    pub fn from_coupling(c: &Coupling) -> CouplingDoc {
        CouplingDoc {
            vars: c
                .vars
                .iter()
                .map(|v| VarDoc {
                    id: v.id.clone(),
                    labels: v.labels.clone(),
                })
                .collect(),
            atoms: c
                .atoms
                .iter()
                .map(|(tuple, prob)| CouplingAtomDoc {
                    values: c
                        .vars
                        .iter()
                        .zip(tuple)
                        .map(|(v, &t)| (v.id.clone(), v.labels[t as usize].clone()))
                        .collect(),
                    prob: prob.to_string(),
                })
                .collect(),
        }
    }

    /// Rebuilds the coupling, resolving labels against the declared vars.
    pub fn to_coupling(&self) -> Result<Coupling> {
        let vars: Vec<CoupledVar> = self
            .vars
            .iter()
            .map(|v| CoupledVar {
                id: v.id.clone(),
                labels: v.labels.clone(),
            })
            .collect();
        let atoms = self
            .atoms
            .iter()
            .map(|atom| {
                let tuple = self
                    .vars
                    .iter()
                    .map(|v| {
                        let label = atom
                            .values
                            .get(&v.id)
                            .with_context(|| format!("atom misses variable `{}`", v.id))?;
                        let idx = v
                            .labels
                            .iter()
                            .position(|l| l == label)
                            .with_context(|| {
                                format!("variable `{}` has no label `{label}`", v.id)
                            })?;
                        Ok(idx as u8)
                    })
                    .collect::<Result<Vec<u8>>>()?;
                let prob: Rational = atom
                    .prob
                    .parse()
                    .with_context(|| format!("bad probability `{}`", atom.prob))?;
                Ok((tuple, prob))
            })
            .collect::<Result<Vec<_>>>()?;
        Coupling::new(vars, atoms).map_err(|e| anyhow::Error::new(e).context("invalid coupling"))
    }
}

pub fn tool_version() -> String {
    format!("cbd {}", env!("CARGO_PKG_VERSION"))
}

pub fn verdict_document(notion: &str, plan: Option<&SplitPlan>, verdict: &Verdict) -> VerdictDocument {
    VerdictDocument {
        tool: tool_version(),
        notion: notion.to_string(),
        status: verdict.status.name().to_string(),
        plan: plan.map(|p| PlanDoc {
            policy: p.policy.name().to_string(),
            dichotomizations: p
                .entries
                .iter()
                .map(|e| (e.content.clone(), e.subsets.len()))
                .collect(),
        }),
        program: verdict.lp_size.as_ref().map(|s| ProgramDoc {
            variables: s.variables,
            constraints: s.constraints,
        }),
        residual: verdict.residual.as_ref().map(|r| r.to_string()),
        witness: verdict.witness.as_ref().map(CouplingDoc::from_coupling),
    }
}

/// Output of `cbd couple`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CoupleDocument {
    pub tool: String,
    pub content: String,
    /// Present when a split content `q:{...}` was addressed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<String>>,
    /// Success probability per context, in context order.
    pub success: BTreeMap<String, String>,
    pub coupling: CouplingDoc,
}
