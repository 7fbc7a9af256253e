pub trait Shape {
    fn area(&self) -> f64;

    fn describe(&self) -> String {
        format!("area {:.2}", self.area())
    }
}

pub mod shapes {
    use super::Shape;

    pub struct Square(pub f64);

    impl Shape for Square {
        fn area(&self) -> f64 {
            self.0 * self.0
        }
    }

    pub fn unit() -> Square {
        Square(1.0)
    }
}

/* block comment with fn hidden() { */
pub fn total(shapes: &[Box<dyn Shape>]) -> f64 {
    shapes.iter().map(|s| s.area()).sum()
}
