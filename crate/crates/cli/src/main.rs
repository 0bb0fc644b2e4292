use clap::Parser;

fn main() {
    let cli = gfv_cli::Cli::parse();
    let code = match gfv_cli::run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    };
    std::process::exit(code);
}
