use std::path::Path;

use eiot_core::mobility::{
    forward_state_selection, preprocess, select_k, synthesize, synthesize_ranks, CellSequence, EmConfig,
    FssConfig, LengthDist, MarkovMixtureModel, PreprocessOptions, StateAggregation,
};
use eiot_core::Error;
use serde_json::json;

use super::load;
use crate::args::{MobilityFitArgs, MobilitySynthArgs};
use crate::output::Output;
use crate::{Failure, Outcome};

/// Read `device_id,sequence` rows; the sequence is space-separated ranks.
/// Other columns are ignored.
fn read_sequences(path: &Path) -> eiot_core::Result<Vec<CellSequence>> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("{}: missing column `{name}`", path.display())))
    };
    let (id_col, seq_col) = (col("device_id")?, col("sequence")?);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let states = rec[seq_col]
            .split_whitespace()
            .map(|x| {
                x.parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{} line {}: bad state `{x}`", path.display(), i + 2)))
            })
            .collect::<eiot_core::Result<Vec<_>>>()?;
        out.push(CellSequence::new(&rec[id_col], states));
    }
    Ok(out)
}

pub fn fit(dir: &Path, args: &MobilityFitArgs) -> Outcome {
    let em = EmConfig {
        restarts: args.restarts,
        short_iter: args.short_iter,
        max_iter: args.max_iter,
        tol: args.tol,
        min_beta: args.min_beta,
        min_gamma: args.min_gamma,
        seed: args.seed,
    };
    let (seqs, source) = match &args.sequences {
        Some(p) => {
            let s = read_sequences(p)?;
            let n = s.len();
            (s, json!({ "sequences_file": p, "sequences": n }))
        }
        None => {
            let data = load(&args.data)?;
            let opts = PreprocessOptions {
                min_len: args.min_len,
                min_distinct: args.min_distinct,
                max_distinct: args.max_distinct,
                sample: args.sample,
                seed: args.seed,
            };
            let pre = preprocess(&data.ds, data.window, &opts)?;
            let info = json!({
                "data": data.summary(),
                "active_devices": pre.active_devices,
                "eligible_devices": pre.eligible_devices,
                "sequences": pre.sequences.len(),
            });
            (pre.sequences, info)
        }
    };
    if seqs.is_empty() {
        return Err(Error::invalid("no sequences to fit").into());
    }
    let out = Output::new(dir, "mobility fit", args, Some(args.seed))?;
    let range = args.k_range.lo..=args.k_range.hi;
    let (model, summary) = if args.fss {
        let r = forward_state_selection(&seqs, range, &FssConfig { em, candidates: args.candidates })?;
        let summary = json!({
            "input": source,
            "method": "fss",
            "best_k": r.model.k(),
            "d": r.aggregation.d(),
            "blocks": r.aggregation.blocks(),
            "bic": r.report.bic,
            "log_likelihood": r.report.log_likelihood,
            "report": r.report,
            "paths": r.paths,
        });
        (r.model, summary)
    } else {
        let m = seqs.iter().flat_map(|s| s.states.iter()).max().map_or(0, |x| x + 1);
        let sel = select_k(&seqs, range, &StateAggregation::identity(m), &em)?;
        let best = sel.reports.iter().find(|r| r.k == sel.best_k).expect("best K was fitted");
        let summary = json!({
            "input": source,
            "method": "em",
            "best_k": sel.best_k,
            "d": m,
            "bic": best.bic,
            "log_likelihood": best.log_likelihood,
            "reports": sel.reports,
        });
        (sel.model, summary)
    };
    out.text("mobility_model.json", &(model.to_json() + "\n"))?;
    out.json("mobility_fit.json", &summary)?;
    Ok(())
}

pub fn synth(dir: &Path, args: &MobilitySynthArgs) -> Outcome {
    if args.length == 0 {
        return Err(Failure::Usage("--length must be positive".into()));
    }
    let model = match &args.model {
        Some(p) => MarkovMixtureModel::load(p)?,
        None => MarkovMixtureModel::reference(),
    };
    let out = Output::new(dir, "mobility synth", args, Some(args.seed))?;
    let lengths = LengthDist::Fixed(args.length);
    let syn = if args.blocks {
        synthesize(&model, args.count, &lengths, args.seed)?
    } else {
        synthesize_ranks(&model, args.count, &lengths, args.seed)?
    };
    out.table(
        "sequences.csv",
        &["device_id", "component", "sequence"],
        syn.sequences.iter().zip(&syn.components).map(|(s, c)| {
            let seq: Vec<String> = s.states.iter().map(usize::to_string).collect();
            vec![s.device_id.clone(), c.to_string(), seq.join(" ")]
        }),
    )?;
    Ok(())
}
