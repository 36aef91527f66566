use clap::Parser;

fn main() {
    let cli = sessionml_cli::Cli::parse();
    let out = sessionml_cli::execute(&cli);
    print!("{}", out.stdout);
    std::process::exit(out.code);
}
