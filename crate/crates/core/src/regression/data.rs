use crate::stream::{BinaryVector, EventStream};

/// Sparse design matrix of binary rows (CSR) with 0/1 targets.
#[derive(Clone, Debug)]
pub struct TrainingData {
    n_features: usize,
    offsets: Vec<u32>,
    indices: Vec<u32>,
    targets: Vec<u8>,
}

impl TrainingData {
    /// Rows are the reduced fingerprints `x^(-j)`; targets are the bits `x^(j)`.
    pub fn for_node(stream: &EventStream, j: usize) -> TrainingData {
        let n = stream.node_count();
        let mut data = TrainingData::with_capacity(n - 1, stream.len());
        for e in stream.events() {
            let fp = &e.fingerprint;
            data.indices.extend(
                fp.nodes()
                    .filter(|&i| i != j)
                    .map(|i| if i > j { i - 1 } else { i } as u32),
            );
            data.offsets.push(data.indices.len() as u32);
            data.targets.push(fp.contains(j) as u8);
        }
        data
    }

    pub fn from_rows(rows: &[BinaryVector], targets: &[bool]) -> TrainingData {
        assert_eq!(rows.len(), targets.len());
        let n_features = rows.first().map_or(0, |r| r.len());
        let mut data = TrainingData::with_capacity(n_features, rows.len());
        for (r, &y) in rows.iter().zip(targets) {
            assert_eq!(r.len(), n_features, "rows must share one length");
            data.indices.extend(r.ones().map(|i| i as u32));
            data.offsets.push(data.indices.len() as u32);
            data.targets.push(y as u8);
        }
        data
    }

    fn with_capacity(n_features: usize, rows: usize) -> TrainingData {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        TrainingData {
            n_features,
            offsets,
            indices: Vec::new(),
            targets: Vec::with_capacity(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Set feature positions of `row`, increasing.
    #[inline]
    pub fn row(&self, row: usize) -> &[u32] {
        &self.indices[self.offsets[row] as usize..self.offsets[row + 1] as usize]
    }

    #[inline]
    pub fn has(&self, row: usize, feature: usize) -> bool {
        self.row(row).binary_search(&(feature as u32)).is_ok()
    }

    #[inline]
    pub fn target(&self, row: usize) -> u8 {
        self.targets[row]
    }

    pub fn base_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.targets.iter().map(|&y| y as u64).sum::<u64>() as f64 / self.len() as f64
    }

    pub fn row_vector(&self, row: usize) -> BinaryVector {
        let ones: Vec<usize> = self.row(row).iter().map(|&i| i as usize).collect();
        BinaryVector::from_ones(self.n_features, &ones).expect("indices below n_features")
    }
}
