use ndarray::Array2;

use super::mel::LogMelSpectrogram;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_FRAMES: usize = 96;
pub const DEFAULT_WINDOW_HOP: usize = 48;

/// Ordered spectrogram context windows of one clip, each `bands x frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSequence {
    pub windows: Vec<Array2<f64>>,
    pub window_hop_s: f64,
    pub clip_id: String,
    /// Set when the clip had fewer frames than one window.
    pub too_short: bool,
}

impl WindowSequence {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// `(bands, frames)` of every window, if any.
    pub fn window_shape(&self) -> Option<(usize, usize)> {
        self.windows.first().map(|w| w.dim())
    }
}

pub fn window_count(num_frames: usize, window_frames: usize, hop_windows: usize) -> usize {
    if num_frames < window_frames {
        0
    } else {
        1 + (num_frames - window_frames) / hop_windows
    }
}

/// Slices `window_frames`-row windows every `hop_windows` rows, transposed to `bands x frames`.
pub fn context_windows(
    logmel: &LogMelSpectrogram,
    clip_id: &str,
    window_frames: usize,
    hop_windows: usize,
) -> Result<WindowSequence> {
    if window_frames == 0 || hop_windows == 0 {
        return Err(Error::invalid("window length and hop must be at least 1"));
    }
    let count = window_count(logmel.num_frames(), window_frames, hop_windows);
    let windows = (0..count)
        .map(|i| {
            let start = i * hop_windows;
            logmel
                .frames
                .slice(ndarray::s![start..start + window_frames, ..])
                .t()
                .to_owned()
        })
        .collect();
    Ok(WindowSequence {
        windows,
        window_hop_s: hop_windows as f64 * logmel.frame_hop_s,
        clip_id: clip_id.to_string(),
        too_short: count == 0,
    })
}
