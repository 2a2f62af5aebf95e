//! `opfx parse`: read a case file and print what the model sees.

use std::path::PathBuf;

use clap::Args;
use opfx::case_model::parse_case;
use opfx::persist::sha256_hex;

use super::read_text;
use crate::failure::CliResult;

#[derive(Args)]
pub struct ParseArgs {
    /// Case file in MATPOWER format.
    #[arg(long)]
    pub case: PathBuf,
}

pub fn run(args: ParseArgs) -> CliResult {
    let text = read_text(&args.case)?;
    let net = parse_case::<f64>(&text)?;
    let loads = net
        .buses
        .iter()
        .filter(|b| b.p_load != 0.0 || b.q_load != 0.0)
        .count();
    println!("name       {}", net.name);
    println!("sha256     {}", sha256_hex(text.as_bytes()));
    println!("buses      {}", net.buses.len());
    println!("generators {}", net.gens.len());
    println!("branches   {}", net.branches.len());
    println!("loads      {}", loads);
    println!("slack bus  {}", net.buses[net.slack_bus].id);
    println!("base MVA   {}", net.base_mva);
    Ok(())
}
