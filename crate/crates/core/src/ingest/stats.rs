use std::collections::BTreeSet;

use super::{GroundTruthBundle, IngestError};
use crate::numfmt::{format_fixed, Rounding};

/// Annotation density of a ground-truth bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleStats {
    pub videos: usize,
    pub queries: usize,
    /// Distinct referent `(video, gt_track_id)` pairs.
    pub tracks: usize,
    pub queries_per_video: f64,
    pub tracks_per_video: f64,
}

impl BundleStats {
    pub fn from_counts(videos: usize, queries: usize, tracks: usize) -> Result<Self, IngestError> {
        if videos == 0 {
            return Err(IngestError::Empty("no videos in ground truth".into()));
        }
        Ok(Self {
            videos,
            queries,
            tracks,
            queries_per_video: queries as f64 / videos as f64,
            tracks_per_video: tracks as f64 / videos as f64,
        })
    }

    /// Sums the counts of several bundles and recomputes the ratios.
    pub fn combine(parts: &[BundleStats]) -> Result<Self, IngestError> {
        Self::from_counts(
            parts.iter().map(|s| s.videos).sum(),
            parts.iter().map(|s| s.queries).sum(),
            parts.iter().map(|s| s.tracks).sum(),
        )
    }

    pub fn queries_per_video_display(&self) -> String {
        format_fixed(self.queries_per_video, 2, Rounding::HalfAwayFromZero)
    }

    pub fn tracks_per_video_display(&self) -> String {
        format_fixed(self.tracks_per_video, 2, Rounding::HalfAwayFromZero)
    }
}

pub fn compute_stats(bundle: &GroundTruthBundle) -> Result<BundleStats, IngestError> {
    let queries = bundle.videos.values().map(|v| v.queries.len()).sum();
    let tracks = bundle
        .videos
        .iter()
        .flat_map(|(vid, v)| {
            v.queries
                .iter()
                .flat_map(|q| q.referents())
                .map(move |r| (vid.as_str(), r.gt_track_id()))
        })
        .collect::<BTreeSet<_>>()
        .len();
    BundleStats::from_counts(bundle.videos.len(), queries, tracks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::VideoGroundTruth;
    use crate::model::{Query, Referent, TemporalSegment};

    #[test]
    fn benchmark_density_counts() {
        let s = BundleStats::from_counts(688, 19_590, 9_781).unwrap();
        assert_eq!(s.queries_per_video_display(), "28.47");
        assert_eq!(s.tracks_per_video_display(), "14.22");
    }

    #[test]
    fn single_video_identity() {
        let seg = TemporalSegment::new(1, 4).unwrap();
        let q = Query::new("q", "v", "t", vec![Referent::new(1, vec![seg]).unwrap()]).unwrap();
        let q2 = Query::new("q2", "v", "t", vec![Referent::new(1, vec![seg]).unwrap()]).unwrap();
        let mut bundle = GroundTruthBundle::default();
        bundle.videos.insert(
            "v".into(),
            VideoGroundTruth {
                tracks: vec![],
                queries: vec![q.clone()],
            },
        );
        let s = compute_stats(&bundle).unwrap();
        assert_eq!(
            (s.queries_per_video_display(), s.tracks_per_video_display()),
            ("1.00".into(), "1.00".into())
        );

        // the same referent in two queries counts once
        bundle.videos.get_mut("v").unwrap().queries.push(q2);
        let s = compute_stats(&bundle).unwrap();
        assert_eq!((s.queries, s.tracks), (2, 1));
    }

    #[test]
    fn zero_videos_is_an_error() {
        assert!(compute_stats(&GroundTruthBundle::default()).is_err());
    }
}
