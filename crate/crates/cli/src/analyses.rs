//! Analysis ids and their evaluation over a transcript batch.

use memlab::analysis::{
    contradiction_report, eve_guessing, naive_claims, qber, signalling_measure, test_subset_consistency,
    EmpiricalDistribution, ExactTable, GuessStrategy, MapDecoder, MAX_EXACT_ROUNDS,
};
use memlab::devices::Device;
use memlab::protocol::{ProtocolKind, Transcript};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const ANALYSIS_IDS: [&str; 7] = [
    "qber",
    "naive_claim",
    "eve_guessing",
    "signalling",
    "signalling_empirical",
    "contradiction",
    "test_subset",
];

pub const STRATEGY_IDS: [&str; 2] = ["copy_decoder", "map_decoder"];

const MAX_SIGNALLING_ROUNDS: usize = 6;
const MAX_SUBSET_ROUNDS: usize = 4;

/// What the analyses run against.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisPlan<'a> {
    pub device: &'a Device,
    pub protocol: ProtocolKind,
    pub rounds: usize,
    pub strategy: &'a str,
}

/// Rejects unknown ids and analyses that cannot run on this plan.
pub fn check_analyses(ids: &[String], plan: &AnalysisPlan<'_>) -> CliResult<()> {
    for id in ids {
        let limit = |max: usize| {
            if plan.rounds > max {
                Err(CliError::config(format!(
                    "analyses: `{id}` enumerates exactly and supports at most {max} rounds, got {}",
                    plan.rounds
                )))
            } else {
                Ok(())
            }
        };
        match id.as_str() {
            "qber" | "naive_claim" => {}
            "eve_guessing" => {
                if plan.protocol != ProtocolKind::ExampleProtocol {
                    return Err(CliError::config("analyses: `eve_guessing` needs protocol = \"example_protocol\""));
                }
                match plan.strategy {
                    "copy_decoder" => {}
                    "map_decoder" => {
                        if plan.rounds / 2 > MapDecoder::MAX_PAIRS {
                            return Err(CliError::config(format!(
                                "strategy: map_decoder supports at most {} pairs",
                                MapDecoder::MAX_PAIRS
                            )));
                        }
                    }
                    other => {
                        return Err(CliError::config(format!(
                            "strategy: unknown strategy `{other}` (known: {})",
                            STRATEGY_IDS.join(", ")
                        )))
                    }
                }
            }
            "signalling" => limit(MAX_SIGNALLING_ROUNDS)?,
            "signalling_empirical" => {
                if plan.rounds < 2 {
                    return Err(CliError::config("analyses: `signalling_empirical` needs at least 2 rounds"));
                }
            }
            "contradiction" => limit(MAX_EXACT_ROUNDS)?,
            "test_subset" => limit(MAX_SUBSET_ROUNDS)?,
            other => {
                return Err(CliError::config(format!(
                    "analyses: unknown analysis `{other}` (known: {})",
                    ANALYSIS_IDS.join(", ")
                )))
            }
        }
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Evaluates `ids` in order. Exact analyses use the device model; the rest
/// read only the transcripts.
pub fn run_analyses(ids: &[String], plan: &AnalysisPlan<'_>, batch: &[Transcript]) -> CliResult<Map<String, Value>> {
    check_analyses(ids, plan)?;
    let mut out = Map::new();
    for id in ids {
        let value = match id.as_str() {
            "qber" => json(qber(batch)),
            "naive_claim" => json(naive_claims(batch)?),
            "eve_guessing" => {
                let n_pairs = plan.rounds / 2;
                let strategy = GuessStrategy::from_id(plan.strategy, Some((plan.device, n_pairs)))?;
                let mut report = json(eve_guessing(batch, &strategy)?);
                if let GuessStrategy::Map(m) = &strategy {
                    report["map_exact"] = json(m.exact());
                }
                report
            }
            "signalling" => json(signalling_measure(&ExactTable::build(plan.device, plan.rounds)?)?),
            "signalling_empirical" => {
                let mut emp = EmpiricalDistribution::new(plan.rounds);
                for t in batch {
                    emp.add_records(&t.rounds)?;
                }
                json(signalling_measure(&emp)?)
            }
            "contradiction" => json(contradiction_report(plan.device, plan.rounds)?),
            "test_subset" => json(test_subset_consistency(plan.device, plan.rounds)?),
            _ => unreachable!("checked above"),
        };
        out.insert(id.clone(), value);
    }
    Ok(out)
}
