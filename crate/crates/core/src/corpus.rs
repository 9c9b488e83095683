//! Small fixed machines used as ground-truth workloads.

use crate::tm::{parse_machine_with_tape, Configuration, TuringMachine};

pub const BINARY_COUNTER: &str = include_str!("../machines/binary_counter.json");
pub const UNARY_ADDER: &str = include_str!("../machines/unary_adder.json");
pub const PALINDROME: &str = include_str!("../machines/palindrome.json");

#[derive(Clone, Debug)]
pub struct CorpusMachine {
    pub name: &'static str,
    pub machine: TuringMachine,
    pub input: Configuration,
}

fn load(name: &'static str, text: &str) -> CorpusMachine {
    let (machine, input) = parse_machine_with_tape(text).expect("corpus machine is valid");
    CorpusMachine {
        name,
        input: input.unwrap_or_else(|| machine.blank_config()),
        machine,
    }
}

/// Increments a binary number (symbol 1 = bit 0, symbol 2 = bit 1, LSB at
/// the head) forever, returning to the least significant bit after each carry.
pub fn binary_counter() -> CorpusMachine {
    load("binary-counter", BINARY_COUNTER)
}

/// Adds two unary numbers separated by a blank; input `1 _ 1 1`.
pub fn unary_adder() -> CorpusMachine {
    load("unary-adder", UNARY_ADDER)
}

/// Accepts (state 6) even-length or odd-length palindromes over `{1, 2}`;
/// input `1 2 1`.
pub fn palindrome() -> CorpusMachine {
    load("palindrome", PALINDROME)
}

pub fn all() -> Vec<CorpusMachine> {
    vec![binary_counter(), unary_adder(), palindrome()]
}

pub fn by_name(name: &str) -> Option<CorpusMachine> {
    all().into_iter().find(|c| c.name == name)
}
