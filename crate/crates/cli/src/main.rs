use clap::Parser;

fn main() -> anyhow::Result<()> {
    let cli = vcsim::Cli::parse();
    for path in vcsim::execute(&cli)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
