use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use super::evaluate::{build_mechanism, KernelArgs};
use crate::args::{load_world, Format, OutputArgs, PrivacyArgs};
use crate::error::CliResult;

/// Export a region kernel as a matrix file.
#[derive(Debug, Args)]
pub struct KernelExportArgs {
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// cloaking, identity or planar-laplace.
    #[arg(long, default_value = "planar-laplace")]
    pub mechanism: String,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn run(a: &KernelExportArgs) -> CliResult<()> {
    let world = load_world(a.world.as_ref())?;
    let k = build_mechanism(&a.mechanism, &world, &a.privacy, &a.kernel)?;
    let mut w = a.out.open()?;
    match a.out.format {
        Format::Json => writeln!(w, "{}", k.to_json()?)?,
        Format::Csv => k.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}
