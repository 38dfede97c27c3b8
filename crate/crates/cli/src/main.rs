fn main() {
    println!("hypolie");
}
