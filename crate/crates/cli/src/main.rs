fn main() {
    todo!("command line interface");
}
