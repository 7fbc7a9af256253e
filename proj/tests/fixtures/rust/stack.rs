use std::fmt;

/// A bounded stack.
pub struct Stack<T> {
    items: Vec<T>,
    limit: usize,
}

impl<T: Clone> Stack<T> {
    pub fn new(limit: usize) -> Self {
        Stack { items: Vec::new(), limit }
    }

    pub fn push(&mut self, v: T) -> Result<(), String> {
        if self.items.len() == self.limit {
            return Err(format!("stack full {{limit {}}}", self.limit));
        }
        self.items.push(v);
        Ok(())
    }
}

impl<T> fmt::Display for Stack<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Stack({})", self.items.len())
    }
}
