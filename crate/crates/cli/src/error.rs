//! Error-to-exit-code mapping: 0 ok, 2 config, 3 io, 4 dimension, 5 numeric.

use polyscan_core::forward::ForwardError;
use polyscan_core::geometry::GeometryError;
use polyscan_core::metrics::MetricsError;
use polyscan_core::nufft::NufftError;
use polyscan_core::plsc::PlscError;
use polyscan_core::recon::ReconError;
use polyscan_core::spectral::SpectralError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Dimension(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Dimension(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Dimension(m) | CliError::Numeric(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ForwardError> for CliError {
    fn from(e: ForwardError) -> Self {
        match e {
            ForwardError::ModalityMismatch { .. } | ForwardError::CubeTooLarge { .. } => {
                CliError::Dimension(e.to_string())
            }
            ForwardError::InvalidScene(_) | ForwardError::Geometry(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::BadPadFactor => CliError::Config(e.to_string()),
            SpectralError::DegenerateScanAxis(_) => CliError::Dimension(e.to_string()),
        }
    }
}

impl From<NufftError> for CliError {
    fn from(e: NufftError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<ReconError> for CliError {
    fn from(e: ReconError) -> Self {
        match e {
            ReconError::DimensionMismatch(_) => CliError::Dimension(e.to_string()),
            ReconError::BadGrid(_) => CliError::Config(e.to_string()),
            ReconError::Coverage { .. } | ReconError::Nufft(_) => CliError::Numeric(e.to_string()),
            ReconError::Spectral(inner) => inner.into(),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::ZeroImage => CliError::Numeric(e.to_string()),
            MetricsError::GridMismatch => CliError::Dimension(e.to_string()),
        }
    }
}

impl From<PlscError> for CliError {
    fn from(e: PlscError) -> Self {
        match e {
            PlscError::PayloadSize { .. } | PlscError::Mismatch(_) => {
                CliError::Dimension(e.to_string())
            }
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
