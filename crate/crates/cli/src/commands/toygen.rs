//! `toygen`: generates the procedural articulated-chain dataset and writes
//! it as a hashed container directory.

use crate::ctx::Ctx;
use crate::error::CliError;
use occluforge_io::{generate_toy_dataset, save_container};

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let out = ctx.require_out("directory for the dataset container")?;
    let toy = generate_toy_dataset(&ctx.config.toy, &ctx.config.corruption, ctx.seed)?;
    let manifest = save_container(out, &toy.dataset)?;

    let mut outputs: Vec<String> = manifest.files.iter().map(|f| f.name.clone()).collect();
    outputs.push("manifest.json".to_string());
    ctx.write_manifest("toygen", out, true, &outputs)?;

    println!(
        "wrote {} sequences / {} frames ({} markers, {} joints) to {}",
        manifest.sequences,
        manifest.frames,
        manifest.markers,
        manifest.joints,
        out.display()
    );
    for (s, occ) in toy.sequence_occlusion.iter().enumerate() {
        println!("sequence {s}: mean occluded fraction {occ:.4}");
    }
    Ok(())
}
