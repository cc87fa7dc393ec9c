use conjlab::cli;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h") {
        print_usage();
        std::process::exit(if args.is_empty() { cli::EXIT_CONFIG_ERROR } else { 0 });
    }
    std::process::exit(cli::run_from_args(&args));
}

fn print_usage() {
    eprintln!(
        "usage: conjlab [COMMAND] [--config FILE] [--key value | --key=value ...]

commands:
  check-weight        Bekollé–Bonami quotients/constant and essential constancy
  verify-lemmas       Taylor identity, pointwise derivative bound, delta-norm probe
  verify-goodlambda   fundamental/chain/containment/decay/layer-cake checks
  estimate-constants  empirical operator constants and degree stability
  full-report         everything above

keys (flag names mirror config keys; flags override the file):
  p, q, weight (unit | power:A | radial-table:PATH | angular:EPS:K[:A]),
  tree_depth, grid_radial, grid_angular, eta (comma list), seed,
  max_degree, family_count, samples, tree_table, output

Reports (checks.csv, goodlambda.csv, bounds.csv, summary.json) are written
to `output`, or ${}, or ./reports. Exit codes: 0 pass, 1 check failure,
2 config error, 3 divergent weight.",
        cli::OUTPUT_DIR_ENV
    );
}
