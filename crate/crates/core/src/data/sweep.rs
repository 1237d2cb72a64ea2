//! Label-subset sweep: train one single-branch model per subset size on
//! composite images, evaluate on held-out composites, and tabulate accuracy
//! against mean average precision. A fixed update budget caps the whole
//! sweep; sizes that do not fit are emitted unmarked as incomplete rows.

use coact_nn::Scalar;

use crate::data::composites::{
    composite_cases, make_composites, CompositeSpec, TileSource,
};
use crate::error::{config_err, CoactError};
use crate::metrics::{
    exact_match_accuracy, mean_average_precision, xnor_accuracy, BitMatrix, ScoreMatrix,
};
use crate::model::{Network, NetworkConfig};
use crate::training::{evaluate, train, CaseSequence, TrainPlan};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Ascending subset sizes; size k labels classes 0..k.
    pub sizes: Vec<usize>,
    pub train_count: usize,
    pub test_count: usize,
    pub epochs: usize,
    /// Maximum optimizer updates across the whole sweep (one update per
    /// composite per epoch).
    pub update_budget: usize,
    pub lr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub subset_size: usize,
    pub xnor_accuracy: f64,
    pub exact_match: f64,
    pub map: f64,
    /// False when the update budget ran out before this size trained.
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
    pub budget_exhausted: bool,
    pub updates_spent: usize,
}

pub fn render_sweep(table: &SweepTable) -> String {
    let mut out = String::from("subset_size,xnor_accuracy,exact_match,map,completed\n");
    for p in &table.points {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            p.subset_size, p.xnor_accuracy, p.exact_match, p.map, p.completed
        ));
    }
    if table.budget_exhausted {
        out.push_str(&format!(
            "# budget exhausted after {} updates\n",
            table.updates_spent
        ));
    }
    out
}

pub fn label_subset_sweep<T: Scalar>(
    source: &TileSource,
    base: &NetworkConfig,
    sweep: &SweepConfig,
) -> Result<SweepTable, CoactError> {
    if sweep.sizes.is_empty() {
        return Err(config_err("sweep needs at least one subset size"));
    }
    if sweep.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err("subset sizes must be strictly ascending"));
    }
    if *sweep.sizes.last().unwrap() > source.class_count {
        return Err(config_err(format!(
            "largest subset {} exceeds the source's {} classes",
            sweep.sizes.last().unwrap(),
            source.class_count
        )));
    }
    if sweep.train_count == 0 || sweep.test_count == 0 || sweep.epochs == 0 {
        return Err(config_err("train count, test count, and epochs must be positive"));
    }

    let mut table = SweepTable {
        points: Vec::new(),
        budget_exhausted: false,
        updates_spent: 0,
    };
    for &size in &sweep.sizes {
        let needed = sweep.epochs * sweep.train_count;
        if table.budget_exhausted || table.updates_spent + needed > sweep.update_budget {
            table.budget_exhausted = true;
            table.points.push(SweepPoint {
                subset_size: size,
                xnor_accuracy: 0.0,
                exact_match: 0.0,
                map: 0.0,
                completed: false,
            });
            continue;
        }

        let mut config = base.clone();
        config.activity_count = size;
        config.preset = None;
        let subset: Vec<u16> = (0..size as u16).collect();
        let train_spec = CompositeSpec::standard(subset.clone(), sweep.seed.wrapping_add(size as u64));
        let test_spec = CompositeSpec::standard(
            subset,
            sweep.seed.wrapping_add(size as u64) ^ 0x7e57_0000,
        );
        let train_set = make_composites(source, sweep.train_count, &train_spec)?;
        let test_set = make_composites(source, sweep.test_count, &test_spec)?;
        let train_cases: Vec<CaseSequence<T>> =
            composite_cases(source, &train_set, "train")?;
        let test_cases: Vec<CaseSequence<T>> = composite_cases(source, &test_set, "test")?;

        let mut net: Network<T> = Network::build(config.clone(), sweep.seed)?;
        let plan = TrainPlan {
            epochs: sweep.epochs,
            lr: sweep.lr,
            dropout_rate: config.dropout_rate,
            seed: sweep.seed,
            checkpoint_every: 0,
            ..TrainPlan::desk()
        };
        let refs: Vec<&CaseSequence<T>> = train_cases.iter().collect();
        let log = train(&mut net, &refs, &plan, None)?;
        table.updates_spent += log.updates;

        let test_refs: Vec<&CaseSequence<T>> = test_cases.iter().collect();
        let rows = evaluate(&mut net, &test_refs, plan.minibatch_seconds)?;
        let pred_bits: Vec<Vec<u8>> = rows.iter().map(|r| r.bits.clone()).collect();
        let pred_scores: Vec<Vec<f64>> = rows.iter().map(|r| r.scores.clone()).collect();
        let truth_rows: Vec<Vec<u8>> = test_cases
            .iter()
            .flat_map(|c| c.truth.clone())
            .collect();
        let p = BitMatrix::from_second_rows(&pred_bits)?;
        let s = ScoreMatrix::from_second_rows(&pred_scores)?;
        let g = BitMatrix::from_second_rows(&truth_rows)?;
        table.points.push(SweepPoint {
            subset_size: size,
            xnor_accuracy: xnor_accuracy(&p, &g)?,
            exact_match: exact_match_accuracy(&p, &g)?,
            map: mean_average_precision(&s, &g)?.map,
            completed: true,
        });
    }
    Ok(table)
}
