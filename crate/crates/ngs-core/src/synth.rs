//! Seeded synthetic corpora with natural-language-like n-gram statistics.
//!
//! Sentences are sampled from a three-level hierarchical Pitman-Yor
//! process: each two-word history owns a Chinese-restaurant process whose
//! new tables draw their dish from the one-word history's restaurant,
//! which in turn backs off to a root restaurant over a uniform base
//! vocabulary. The construction yields power-law type/token curves, heavy
//! singleton tails and informative trigram structure — the regime the
//! discount-based estimators are built for — while staying fully
//! deterministic for a fixed seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::corpus::RawCorpus;

/// Parameters of the generator. `Default` produces roughly a million
/// tokens with a vocabulary in the tens of thousands.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// RNG seed; equal seeds give byte-identical corpora.
    pub seed: u64,
    /// Number of sentences to emit.
    pub sentences: usize,
    /// Mean sentence length (geometric distribution).
    pub mean_len: f64,
    /// Hard cap on sentence length.
    pub max_len: usize,
    /// Size of the uniform base vocabulary at the root level.
    pub base_vocab: u32,
    /// Pitman-Yor discounts per level, root first.
    pub discounts: [f64; 3],
    /// Pitman-Yor strengths per level, root first.
    pub strengths: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            sentences: 78_000,
            mean_len: 14.0,
            max_len: 46,
            base_vocab: 30_000,
            discounts: [0.4, 0.75, 0.82],
            strengths: [400.0, 6.0, 1.2],
        }
    }
}

/// One Chinese-restaurant process: tables with their dish and occupancy,
/// plus the table index of every seated customer for O(1) sampling.
#[derive(Debug, Default)]
struct Restaurant {
    tables: Vec<(u32, u64)>,
    customers: Vec<u32>,
}

enum Seating {
    Existing(u32),
    NewTable,
}

impl Restaurant {
    /// Picks a table according to CRP probabilities: an existing table `k`
    /// with weight `count_k - discount`, a new table with weight
    /// `strength + discount * tables`. Uses one uniform draw over seated
    /// customers plus a rejection step, so the cost does not grow with the
    /// table count.
    fn sample(&self, rng: &mut ChaCha8Rng, discount: f64, strength: f64) -> Seating {
        let seated = self.customers.len() as f64;
        let r = rng.gen::<f64>() * (seated + strength);
        if r < seated {
            let table = self.customers[r as usize];
            let count = self.tables[table as usize].1 as f64;
            // Accepting with (count - d) / count leaves each table a
            // rejected share of d, which is exactly the new-table bonus.
            if rng.gen::<f64>() * count < count - discount {
                return Seating::Existing(table);
            }
        }
        Seating::NewTable
    }

    fn seat_at(&mut self, table: u32) -> u32 {
        self.tables[table as usize].1 += 1;
        self.customers.push(table);
        self.tables[table as usize].0
    }

    fn seat_new(&mut self, dish: u32) -> u32 {
        let table = self.tables.len() as u32;
        self.tables.push((dish, 1));
        self.customers.push(table);
        dish
    }
}

/// Context keys reserved for positions before the first word; they can
/// never collide with generated word ids, which a u32 base vocabulary
/// keeps far below them.
const START_1: u64 = u64::MAX;
const START_2: u64 = u64::MAX - 1;

fn pack(u: u64, v: u64) -> u64 {
    // Word ids and start keys both fit 32 significant bits once the start
    // keys are remapped into the space just above the base vocabulary.
    u << 32 | v & 0xffff_ffff
}

struct Generator {
    rng: ChaCha8Rng,
    config: SynthConfig,
    root: Restaurant,
    unigram: HashMap<u64, Restaurant>,
    bigram: HashMap<u64, Restaurant>,
}

impl Generator {
    fn new(config: SynthConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            root: Restaurant::default(),
            unigram: HashMap::new(),
            bigram: HashMap::new(),
        }
    }

    /// Draws a word for the context `(u, v)`, seating customers down the
    /// back-off chain wherever new tables open.
    fn draw(&mut self, u: u64, v: u64) -> u32 {
        match self.bigram.entry(pack(u, v)).or_default().sample(
            &mut self.rng,
            self.config.discounts[2],
            self.config.strengths[2],
        ) {
            Seating::Existing(table) => {
                self.bigram.get_mut(&pack(u, v)).expect("context exists").seat_at(table)
            }
            Seating::NewTable => {
                let dish = self.draw_unigram(v);
                self.bigram.get_mut(&pack(u, v)).expect("context exists").seat_new(dish)
            }
        }
    }

    fn draw_unigram(&mut self, v: u64) -> u32 {
        match self.unigram.entry(v).or_default().sample(
            &mut self.rng,
            self.config.discounts[1],
            self.config.strengths[1],
        ) {
            Seating::Existing(table) => {
                self.unigram.get_mut(&v).expect("context exists").seat_at(table)
            }
            Seating::NewTable => {
                let dish = self.draw_root();
                self.unigram.get_mut(&v).expect("context exists").seat_new(dish)
            }
        }
    }

    fn draw_root(&mut self) -> u32 {
        match self.root.sample(
            &mut self.rng,
            self.config.discounts[0],
            self.config.strengths[0],
        ) {
            Seating::Existing(table) => self.root.seat_at(table),
            Seating::NewTable => {
                let dish = self.rng.gen_range(0..self.config.base_vocab);
                self.root.seat_new(dish)
            }
        }
    }

    fn sentence_len(&mut self) -> usize {
        // Geometric with the configured mean, clipped to [1, max_len].
        let p = 1.0 / self.config.mean_len.max(1.0);
        let u: f64 = self.rng.gen();
        let len = 1 + ((1.0 - u).ln() / (1.0 - p).ln()) as usize;
        len.min(self.config.max_len)
    }
}

/// Generates a corpus; word ids become tokens `w0`, `w1`, ….
pub fn generate(config: &SynthConfig) -> RawCorpus {
    assert!(
        config.base_vocab < u32::MAX - 1,
        "base vocabulary must leave room for the start-context keys"
    );
    let mut generator = Generator::new(config.clone());
    let mut sentences = Vec::with_capacity(config.sentences);
    let mut token_total = 0u64;
    for _ in 0..config.sentences {
        let len = generator.sentence_len();
        let mut words = Vec::with_capacity(len);
        let (mut u, mut v) = (START_2, START_1);
        for _ in 0..len {
            let word = generator.draw(u, v);
            words.push(format!("w{word}"));
            (u, v) = (v, word as u64);
        }
        token_total += words.len() as u64;
        sentences.push(words);
    }
    RawCorpus { sentences, token_total }
}
