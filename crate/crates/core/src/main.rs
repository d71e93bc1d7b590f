use clap::Parser;

use varisk::cli::{run, Command, Flags};

/// Static and dynamic convex risk measures on finite scenario trees.
#[derive(Debug, Parser)]
#[command(name = "varisk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

fn main() {
    let cli = Cli::parse();
    let (report, code) = run(cli.command, &cli.flags);
    print!("{}", report.render(cli.flags.format));
    std::process::exit(code);
}
