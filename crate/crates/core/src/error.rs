//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape does not fit in the grid with the required margin: {0}")]
    ShapeOutOfBounds(String),

    #[error("degenerate shape parameter: {0}")]
    DegenerateShape(String),

    #[error("field grid does not match the domain grid")]
    SpecMismatch,

    #[error("profile length {got} does not match boundary length {want}")]
    AlignmentMismatch { got: usize, want: usize },

    #[error("moment order {0} is above the supported maximum {1}")]
    MomentOrder(usize, usize),

    #[error("point ({x:.4}, {y:.4}) is less than {cells} cells from the boundary")]
    TooCloseToBoundary { x: f64, y: f64, cells: f64 },

    #[error("iterative solver stalled: relative residual {residual:.3e} after {iterations} sweeps")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("coefficient below floor: min {min:.3e} < {floor:.3e}")]
    CoefficientFloor { min: f64, floor: f64 },

    #[error("Schrödinger coefficient must be nonnegative: min {0:.3e}")]
    NegativeCoefficient(f64),

    #[error("time step {dt:.3e} exceeds the CFL bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("moving boundary reached the grid edge")]
    BoundaryAtGridEdge,

    #[error("suction (Q < 0) is refused: shrinking domains are not unique")]
    SuctionRefused,

    #[error("permeability must be radially nondecreasing: decreases near r = {0:.4}")]
    DecreasingPermeability(f64),

    #[error("measure support violates the 25% box margin")]
    SupportMargin,

    #[error("balayage mass conservation failed: relative error {0:.3e} (box under-resolved?)")]
    MassConservation(f64),

    #[error("series guard triggered: estimated contraction {0:.3} >= 0.5")]
    SeriesDivergence(f64),

    #[error("series length {0} is above the supported maximum 6")]
    SeriesTooLong(usize),

    #[error("probe is closer than 3 cells to the boundary")]
    ProbeTooClose,

    #[error("Fourier mode order {0} is above the resolvable maximum {1}")]
    ModeOrder(usize, usize),

    #[error("operation requires the unit disk")]
    NotUnitDisk,

    #[error("boundary node index {0} out of range ({1} nodes)")]
    BoundaryIndex(usize, usize),

    #[error("boundary is not a single closed loop")]
    MultipleLoops,

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("empty growth family or fewer states than required")]
    ShortFamily,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
