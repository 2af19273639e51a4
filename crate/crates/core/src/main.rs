fn main() {
    std::process::exit(defect_lens::cli::run());
}
