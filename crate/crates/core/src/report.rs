//! Analysis reports. The JSON and text renderings are both produced from
//! [`EstimateReport`], and neither contains timing data, so identical inputs
//! give byte-identical output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::classifier::{
    classify_markov_chain, full_classification, CandidateSets, ClassifierError, Estimate, Options, StepTrace,
    Verdict,
};
use crate::components::ZbMode;
use crate::model::{add_step_counter, VassMdp};
use crate::ratlp::SolveStats;
use crate::FORMAT_VERSION;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ItemReport {
    pub name: String,
    pub verdict: Verdict,
    pub display: String,
    pub provenance: String,
}

impl ItemReport {
    fn new(name: impl Into<String>, est: &Estimate) -> Self {
        ItemReport {
            name: name.into(),
            verdict: est.verdict,
            display: est.verdict.to_string(),
            provenance: est.provenance.clone(),
        }
    }
}

/// Unique component of one MEC of a Markov chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub states: Vec<String>,
    /// Nonzero flow values as `transition = p/q`.
    pub flow: Vec<(String, String)>,
    pub c_plus: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Mdp,
    MarkovChain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EstimateReport {
    pub tool: String,
    pub format_version: String,
    pub model_hash: String,
    pub analysis: Analysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zb_mode: Option<String>,
    pub length: ItemReport,
    pub counters: Vec<ItemReport>,
    pub transitions: Vec<ItemReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<StepTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_sets: Option<CandidateSets>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessReport>,
    pub stats: SolveStats,
    pub notes: Vec<String>,
    pub cap_reached: bool,
    pub unresolved: bool,
}

fn zb_name(mode: ZbMode) -> &'static str {
    match mode {
        ZbMode::Literal => "literal",
        ZbMode::Bounded => "bounded",
    }
}

/// Classifies the length, every counter and every transition of a strongly
/// connected model. The length is the verdict of an added step counter.
pub fn analyze(m: &VassMdp, options: Options) -> Result<EstimateReport, ClassifierError> {
    let (with_sc, _) = add_step_counter(m);
    let c = full_classification(&with_sc, options)?;
    let counters = (0..m.dim())
        .map(|i| ItemReport::new(&m.counters()[i], &c.counters[i]))
        .collect();
    let transitions = (0..m.num_transitions())
        .map(|t| ItemReport::new(&m.transition(t).id, &c.transitions[t]))
        .collect();
    let unresolved = c.has_unresolved();
    Ok(EstimateReport {
        tool: "vassbound".into(),
        format_version: FORMAT_VERSION.into(),
        model_hash: m.hash(),
        analysis: Analysis::Mdp,
        max_k: Some(options.cap),
        zb_mode: Some(zb_name(options.zb_mode).into()),
        length: ItemReport::new("length", &c.counters[m.dim()]),
        counters,
        transitions,
        trace: c.trace,
        final_sets: Some(c.final_sets),
        witnesses: Vec::new(),
        stats: c.stats,
        notes: c.notes,
        cap_reached: c.cap_reached,
        unresolved,
    })
}

/// Report of [`classify_markov_chain`].
pub fn markov_chain_report(m: &VassMdp) -> Result<EstimateReport, ClassifierError> {
    let v = classify_markov_chain(m)?;
    let witnesses = v
        .witnesses
        .iter()
        .map(|w| WitnessReport {
            states: w.mec.states.iter().map(|&p| m.state(p).name.clone()).collect(),
            flow: w
                .flow
                .flow
                .iter()
                .enumerate()
                .filter(|(_, f)| !num_traits::Zero::is_zero(*f))
                .map(|(t, f)| (m.transition(t).id.clone(), f.to_string()))
                .collect(),
            c_plus: w.c_plus.iter().map(|&c| m.counters()[c].clone()).collect(),
        })
        .collect();
    Ok(EstimateReport {
        tool: "vassbound".into(),
        format_version: FORMAT_VERSION.into(),
        model_hash: m.hash(),
        analysis: Analysis::MarkovChain,
        max_k: None,
        zb_mode: None,
        length: ItemReport::new("length", &v.length),
        counters: (0..m.dim()).map(|i| ItemReport::new(&m.counters()[i], &v.counters[i])).collect(),
        transitions: (0..m.num_transitions())
            .map(|t| ItemReport::new(&m.transition(t).id, &v.transitions[t]))
            .collect(),
        trace: Vec::new(),
        final_sets: None,
        witnesses,
        stats: SolveStats::default(),
        notes: Vec::new(),
        cap_reached: false,
        unresolved: false,
    })
}

fn fmt_set(s: &BTreeSet<u32>) -> String {
    let items: Vec<String> = s.iter().map(u32::to_string).collect();
    format!("{{{}}}", items.join(","))
}

impl EstimateReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// All items with their labels as used on the command line.
    pub fn items(&self) -> impl Iterator<Item = (String, &ItemReport)> {
        std::iter::once(("length".to_string(), &self.length))
            .chain(self.counters.iter().map(|i| (format!("counter:{}", i.name), i)))
            .chain(self.transitions.iter().map(|i| (format!("transition:{}", i.name), i)))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} report, format {}", self.tool, self.format_version);
        let _ = writeln!(out, "model     sha256:{}", self.model_hash);
        match self.analysis {
            Analysis::Mdp => {
                let _ = writeln!(
                    out,
                    "analysis  mdp, max-k {}, zb-mode {}",
                    self.max_k.unwrap_or_default(),
                    self.zb_mode.as_deref().unwrap_or("literal")
                );
            }
            Analysis::MarkovChain => {
                let _ = writeln!(out, "analysis  markov-chain");
            }
        }
        out.push('\n');
        let rows: Vec<(String, &ItemReport)> = self
            .items()
            .map(|(label, i)| (label.replacen(':', " ", 1), i))
            .collect();
        let w1 = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0).max(4);
        let w2 = rows.iter().map(|(_, i)| i.display.chars().count()).max().unwrap_or(0).max(7);
        let _ = writeln!(out, "{:<w1$}  {:<w2$}  provenance", "item", "verdict");
        for (label, item) in &rows {
            let _ = writeln!(out, "{label:<w1$}  {:<w2$}  {}", item.display, item.provenance);
        }
        if !self.trace.is_empty() {
            out.push_str("\nsteps\n");
            for s in &self.trace {
                let t_star = s.t_star.map_or("-".to_string(), |t| t.to_string());
                let _ = writeln!(
                    out,
                    "  k={} t*={} Aset={} Bset={} T'={{{}}}",
                    s.k,
                    t_star,
                    fmt_set(&s.candidates.aset),
                    fmt_set(&s.candidates.bset),
                    s.t_prime.join(",")
                );
                if !s.tight.is_empty() {
                    let _ = writeln!(out, "    tight: {}", s.tight.join(" "));
                }
                if !s.lower.is_empty() {
                    let _ = writeln!(out, "    lower n^{}: {}", s.k + 1, s.lower.join(" "));
                }
            }
        }
        if let Some(f) = &self.final_sets {
            let _ = writeln!(
                out,
                "\nfinal     Aset={} Bset={} X0={} X1={} X2={}",
                fmt_set(&f.aset),
                fmt_set(&f.bset),
                fmt_set(&f.x0),
                fmt_set(&f.x1),
                fmt_set(&f.x2)
            );
        }
        for w in &self.witnesses {
            let flow: Vec<String> = w.flow.iter().map(|(t, f)| format!("{t}={f}")).collect();
            let _ = writeln!(
                out,
                "\ncomponent on {{{}}}: {}; C+ = {{{}}}",
                w.states.join(","),
                flow.join(" "),
                w.c_plus.join(",")
            );
        }
        if self.analysis == Analysis::Mdp {
            let _ = writeln!(out, "solver    {} LPs, {} pivots", self.stats.lps, self.stats.pivots);
        }
        if !self.notes.is_empty() {
            out.push_str("\nnotes\n");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        if self.cap_reached {
            out.push_str("\ndegree cap reached; some items are unresolved\n");
        } else if self.unresolved {
            out.push_str("\nsome items are unresolved\n");
        }
        out
    }
}
