fn main() {
    println!("cascade-nvs");
}
