/// Topic-word count table `n_kw`.
///
/// `Dense` stores a word-major `V x K` array so that one word's counts across
/// all topics are contiguous. `Sparse` keeps, per word, a topic-sorted list of
/// non-zero counts; it is meant for large `K` over large vocabularies where
/// most (topic, word) cells are empty. Both produce identical values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicWordCounts {
    Dense {
        topics: usize,
        counts: Vec<u32>,
    },
    Sparse {
        topics: usize,
        rows: Vec<Vec<(u32, u32)>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountLayout {
    /// Dense unless `K * V` exceeds [`SPARSE_THRESHOLD`].
    #[default]
    Auto,
    Dense,
    Sparse,
}

pub const SPARSE_THRESHOLD: usize = 1 << 26;

impl TopicWordCounts {
    pub fn new(topics: usize, vocab_size: usize, layout: CountLayout) -> Self {
        let sparse = match layout {
            CountLayout::Auto => topics.saturating_mul(vocab_size) > SPARSE_THRESHOLD,
            CountLayout::Dense => false,
            CountLayout::Sparse => true,
        };
        if sparse {
            TopicWordCounts::Sparse {
                topics,
                rows: vec![Vec::new(); vocab_size],
            }
        } else {
            TopicWordCounts::Dense {
                topics,
                counts: vec![0; topics * vocab_size],
            }
        }
    }

    pub fn topics(&self) -> usize {
        match self {
            TopicWordCounts::Dense { topics, .. } | TopicWordCounts::Sparse { topics, .. } => *topics,
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            TopicWordCounts::Dense { topics, counts } => counts.len() / (*topics).max(1),
            TopicWordCounts::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, TopicWordCounts::Sparse { .. })
    }

    pub fn get(&self, topic: usize, word: usize) -> u32 {
        match self {
            TopicWordCounts::Dense { topics, counts } => counts[word * topics + topic],
            TopicWordCounts::Sparse { rows, .. } => {
                let row = &rows[word];
                match row.binary_search_by_key(&(topic as u32), |&(t, _)| t) {
                    Ok(i) => row[i].1,
                    Err(_) => 0,
                }
            }
        }
    }

    #[inline]
    pub fn increment(&mut self, topic: usize, word: usize) {
        match self {
            TopicWordCounts::Dense { topics, counts } => counts[word * *topics + topic] += 1,
            TopicWordCounts::Sparse { rows, .. } => {
                let row = &mut rows[word];
                match row.binary_search_by_key(&(topic as u32), |&(t, _)| t) {
                    Ok(i) => row[i].1 += 1,
                    Err(i) => row.insert(i, (topic as u32, 1)),
                }
            }
        }
    }

    #[inline]
    pub fn decrement(&mut self, topic: usize, word: usize) {
        match self {
            TopicWordCounts::Dense { topics, counts } => counts[word * *topics + topic] -= 1,
            TopicWordCounts::Sparse { rows, .. } => {
                let row = &mut rows[word];
                let i = row
                    .binary_search_by_key(&(topic as u32), |&(t, _)| t)
                    .expect("decrement of a zero count");
                row[i].1 -= 1;
                if row[i].1 == 0 {
                    row.remove(i);
                }
            }
        }
    }

    /// Writes `n_kw[k][word] + beta` for every topic into `out`.
    #[inline]
    pub fn smoothed_column(&self, word: usize, beta: f64, out: &mut [f64]) {
        match self {
            TopicWordCounts::Dense { topics, counts } => {
                let col = &counts[word * topics..(word + 1) * topics];
                for (o, &c) in out.iter_mut().zip(col) {
                    *o = c as f64 + beta;
                }
            }
            TopicWordCounts::Sparse { rows, .. } => {
                out.fill(0.0 + beta);
                for &(t, c) in &rows[word] {
                    out[t as usize] = c as f64 + beta;
                }
            }
        }
    }

    /// Non-zero `(word, count)` pairs for one topic, ascending by word.
    pub fn topic_row(&self, topic: usize) -> Vec<(u32, u32)> {
        match self {
            TopicWordCounts::Dense { topics, counts } => counts
                .chunks_exact(*topics)
                .enumerate()
                .filter_map(|(w, col)| (col[topic] > 0).then_some((w as u32, col[topic])))
                .collect(),
            TopicWordCounts::Sparse { rows, .. } => rows
                .iter()
                .enumerate()
                .filter_map(|(w, row)| {
                    row.binary_search_by_key(&(topic as u32), |&(t, _)| t)
                        .ok()
                        .map(|i| (w as u32, row[i].1))
                })
                .collect(),
        }
    }
}
