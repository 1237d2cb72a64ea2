//! Analysis commands that need no dataset: memory accounting and gradient
//! verification.

use anyhow::bail;
use clap::Args;
use coact_core::gradcheck::full_model_check;
use coact_core::memcalc::{estimate_memory, render_delimited, render_text};
use coact_nn::gradcheck::op_suite;

use crate::{load_env, write_out, Common};

#[derive(Args)]
pub struct MemreportArgs {
    #[command(flatten)]
    common: Common,

    /// Architecture preset; overrides the config file's network.
    #[arg(long)]
    preset: Option<String>,
}

pub fn memreport(args: MemreportArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let config = env.network(args.preset.as_deref(), Some("trauma35"))?;
    let report = estimate_memory(&config)?;
    let text = render_text(&report);
    crate::emit(&text);
    write_out(&env.out.join("memreport.txt"), &text)?;
    write_out(&env.out.join("memreport.csv"), &render_delimited(&report))?;
    Ok(())
}

#[derive(Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    common: Common,

    /// Float width to verify at; central differences need 64.
    #[arg(long, default_value_t = 64)]
    bits: u32,

    /// Relative-error tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

pub fn gradcheck(args: GradcheckArgs) -> anyhow::Result<()> {
    if args.bits != 64 {
        bail!(
            "gradient verification runs at 64-bit; {}-bit arithmetic rounds \
             off below the {:.0e} tolerance",
            args.bits,
            args.tolerance
        );
    }
    let env = load_env(&args.common)?;
    let mut report = op_suite(env.seed, args.tolerance);
    report.merge(full_model_check(env.seed, args.tolerance)?);
    let text = report.render();
    crate::emit(&text);
    write_out(&env.out.join("gradcheck.txt"), &text)?;
    if !report.passed() {
        bail!("gradient check failed; see gradcheck.txt");
    }
    Ok(())
}
