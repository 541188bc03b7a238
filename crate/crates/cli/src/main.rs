use clap::Parser;

fn main() {
    let cli = match sphere_sim::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { sphere_sim::EXIT_USAGE } else { 0 });
        }
    };
    std::process::exit(sphere_sim::execute(cli));
}
