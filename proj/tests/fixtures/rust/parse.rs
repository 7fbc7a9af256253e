#[derive(Debug, PartialEq)]
pub enum Token {
    Num(i64),
    Plus,
}

const RAW: &str = r#"fn fake() { "}" }"#;

pub fn tokenize(input: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for ch in input.chars() {
        match ch {
            '+' => out.push(Token::Plus),
            '0'..='9' => out.push(Token::Num(ch as i64 - '0' as i64)),
            _ => {}
        }
    }
    out
}

fn eval<'a>(tokens: &'a [Token]) -> i64 {
    tokens.iter().fold(0, |acc, t| match t {
        Token::Num(n) => acc + n,
        Token::Plus => acc,
    })
}
