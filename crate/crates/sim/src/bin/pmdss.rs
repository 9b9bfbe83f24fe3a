fn main() {
    if let Err(e) = pmdss_sim::cli::run() {
        eprintln!("status=error\tkind={}\tdetail={}", e.kind(), e);
        std::process::exit(1);
    }
}
