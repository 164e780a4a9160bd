//! Audio front end: WAV input, resampling, STFT and standardized log-mel.

mod audio;
mod frontend;
mod resample;

pub use audio::{read_wav, write_wav_pcm16, Waveform};
pub use frontend::{
    hann_window, hz_to_mel, log_standardize, mel_energies, mel_to_hz, stft, FrontEnd,
    FrontEndConfig, MelFilterbank, Spectrogram,
};
pub use resample::resample;
