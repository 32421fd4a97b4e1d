fn main() {
    std::process::exit(comec::cli());
}
