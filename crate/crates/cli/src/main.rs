use clap::Parser;

fn main() {
    let args = swingq_cli::Args::parse();
    match swingq_cli::run(&args) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
