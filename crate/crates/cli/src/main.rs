use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hspec::{exit_code, parse_workspace, run_all, Query};

/// Runs queries against a workspace of spectral models.
#[derive(Parser)]
#[command(name = "hspec", version)]
struct Cli {
    /// Emit one JSON document per query.
    #[arg(long)]
    json: bool,
    /// Exit with 3 when a query is inconclusive.
    #[arg(long)]
    strict: bool,
    /// Workspace file.
    workspace: PathBuf,
    /// A single query; the workspace's own queries run when omitted.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    query: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ws = match parse_workspace(&cli.workspace) {
        Ok(ws) => ws,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let queries = if cli.query.is_empty() {
        ws.queries.clone()
    } else {
        let tokens: Vec<&str> = cli.query.iter().flat_map(|t| t.split_whitespace()).collect();
        match Query::from_tokens(&tokens).and_then(|q| q.resolve(&ws).map(|()| q)) {
            Ok(q) => vec![q],
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    };
    let reports = run_all(&ws, &queries);
    for r in &reports {
        if cli.json {
            println!("{}", r.to_json());
        } else {
            print!("{}", r.to_text());
        }
    }
    ExitCode::from(exit_code(&reports, cli.strict))
}
