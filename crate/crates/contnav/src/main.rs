fn main() {
    std::process::exit(contnav::run_cli());
}
