fn main() {
    std::process::exit(fermat_st::cli::run(std::env::args_os()));
}
