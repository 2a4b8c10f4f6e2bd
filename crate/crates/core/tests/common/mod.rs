#![allow(dead_code)]

use std::collections::HashMap;

use ppir_core::query::{Query, ServerView};
use ppir_core::scenario::{MessageContent, MessageInput, Scenario, ScenarioInput};

pub const EX2_G: [[u64; 8]; 5] = [
    [1, 0, 0, 0, 0, 1, 5, 4],
    [0, 1, 0, 0, 0, 6, 9, 7],
    [0, 0, 1, 0, 0, 10, 1, 5],
    [0, 0, 0, 1, 0, 1, 4, 5],
    [0, 0, 0, 0, 1, 5, 4, 2],
];

pub fn ex2_generator() -> Vec<Vec<u64>> {
    EX2_G.iter().map(|r| r.to_vec()).collect()
}

fn build(
    q: u64,
    l: usize,
    classes: &[&[usize]],
    eta: usize,
    users: Vec<Vec<Vec<usize>>>,
    contents: &[(usize, &[u64])],
    generator: Option<Vec<Vec<u64>>>,
) -> Scenario {
    let known: HashMap<usize, Vec<u64>> = contents.iter().map(|&(f, c)| (f, c.to_vec())).collect();
    let classes = classes
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&f| MessageInput {
                    id: Some(f),
                    content: known.get(&f).map_or(MessageContent::Random, |c| MessageContent::Explicit(c.clone())),
                })
                .collect()
        })
        .collect();
    let input = ScenarioInput {
        field_order: q,
        symbols_per_message: l,
        classes,
        eta,
        identifiable_classes: None,
        users,
        explicit_generator: generator,
        seed: 2024,
    };
    Scenario::from_input(&input).expect("example scenario loads")
}

pub const EX1_CLASSES: [&[usize]; 3] = [&[1, 8, 7], &[2, 3, 5], &[4, 6, 9]];

/// Three classes, all identifiable.
pub fn example1() -> Scenario {
    build(7, 1, &EX1_CLASSES, 3, vec![vec![vec![1], vec![1], vec![2]]], &[], None)
}

/// Example 1's classes shared by two users.
pub fn example4() -> Scenario {
    build(7, 1, &EX1_CLASSES, 3, vec![vec![vec![1], vec![1], vec![2]], vec![vec![2], vec![3], vec![3]]], &[], None)
}

pub fn example2() -> Scenario {
    build(
        11,
        2,
        &[
            &[4, 7, 11, 12, 21, 28, 30],
            &[1, 8, 13, 17, 25, 39],
            &[2, 10, 15, 19, 23, 27, 31, 34],
            &[3, 9, 16, 18, 24, 26, 32, 35, 37],
            &[5, 6, 14, 20, 22, 29, 33, 36, 38],
        ],
        3,
        vec![vec![vec![3, 4, 7], vec![1, 2, 4, 5], vec![1, 2, 3, 4, 6], vec![2, 3], vec![1, 2, 8]]],
        &[(11, &[0, 1]), (8, &[1, 7]), (23, &[9, 4]), (35, &[6, 1]), (14, &[8, 3])],
        Some(ex2_generator()),
    )
}

pub fn example3() -> Scenario {
    build(
        11,
        2,
        &[
            &[1, 6, 11, 21, 26, 35, 41, 43, 49],
            &[2, 7, 12, 17, 22, 36, 38, 44, 47],
            &[3, 13, 18, 28, 33, 37, 39, 40, 42, 46],
            &[9, 14, 19, 24, 29, 48],
            &[5, 10, 15, 20, 25, 30, 34],
            &[4, 8, 16, 23, 27, 31, 32, 45],
        ],
        3,
        vec![vec![vec![2, 3, 4, 7], vec![1, 3, 4, 8], vec![1, 5, 7], vec![2, 3], vec![2, 5], vec![4, 8]]],
        &[],
        None,
    )
}

pub fn example5() -> Scenario {
    build(
        13,
        2,
        &[
            &[1, 8, 15, 22, 29, 36, 42],
            &[2, 9, 16, 23, 30, 37, 52],
            &[3, 10, 17, 24, 31, 50, 51],
            &[4, 11, 18, 25, 32, 41, 43, 47, 53],
            &[5, 12, 19, 26, 33, 38, 44, 48],
            &[6, 13, 20, 27, 34, 39, 45],
            &[7, 14, 21, 28, 35, 40, 46, 49],
        ],
        5,
        vec![
            vec![vec![1, 2, 3, 4], vec![1, 2, 3, 4], vec![1, 2, 3, 4], vec![1, 2, 3, 4, 5], vec![1, 2, 3, 4], vec![1, 2, 3], vec![1, 2]],
            vec![vec![4, 5, 6, 7], vec![2, 4, 5, 6], vec![1, 2, 4, 5], vec![3, 4, 5, 6, 7, 8], vec![4, 5, 6, 7], vec![3, 4], vec![1, 3, 4]],
        ],
        &[],
        None,
    )
}

/// Γ=2, η=1, μ=(2,2), k=(1,0).
pub fn tiny() -> Scenario {
    build(5, 1, &[&[1, 2], &[3, 4]], 1, vec![vec![vec![1], vec![]]], &[], None)
}

pub fn view(disclosed: usize, rows: &[&[usize]]) -> ServerView {
    ServerView {
        disclosed,
        queries: rows.iter().enumerate().map(|(j, r)| Query { j: j + 1, subclass: r.to_vec() }).collect(),
    }
}

pub const EX2_CASE1: [&[usize]; 4] = [&[3, 2, 5, 8, 3], &[6, 4, 7, 2, 5], &[4, 1, 6, 9, 1], &[5, 3, 2, 1, 2]];
pub const EX2_CASE2: [&[usize]; 4] = [&[1, 1, 2, 9, 1], &[4, 6, 1, 8, 3], &[7, 5, 7, 2, 5], &[2, 4, 3, 1, 2]];
pub const EX3_PLAN: [&[usize]; 3] = [&[9, 3, 5, 3, 2, 8], &[4, 2, 7, 6, 1, 1], &[7, 8, 10, 2, 3, 6]];
pub const EX5_CASE1: [&[usize]; 4] =
    [&[1, 5, 2, 3, 4, 2, 8], &[2, 1, 3, 4, 6, 1, 3], &[4, 2, 1, 6, 1, 4, 1], &[3, 4, 4, 1, 2, 3, 5]];
pub const EX5_CASE3: [&[usize]; 4] =
    [&[4, 5, 1, 6, 1, 2, 8], &[3, 4, 4, 1, 2, 1, 3], &[5, 1, 2, 3, 4, 4, 1], &[2, 2, 3, 4, 6, 3, 5]];
