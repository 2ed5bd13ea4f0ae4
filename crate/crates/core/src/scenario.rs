//! A complete link: both hops, the surface, noise and the packet format.

use serde::{Deserialize, Serialize};

use crate::channel::{omega_from_geometry, LinkGeometry, NakagamiLink, NoiseModel, RisConfig};
use crate::error::Result;
use crate::fbl::FblParams;
use crate::units::{db_to_linear, dbm_to_watts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub link_bn: NakagamiLink,
    pub link_nd: NakagamiLink,
    pub ris: RisConfig,
    pub noise: NoiseModel,
    pub fbl: FblParams,
}

impl Scenario {
    /// Reference link (m = 3 on both hops, 125 m / 3 m, 10 MHz, sigma_d^2 = -131.5 dBW,
    /// 3 dB noise figure, 500 channel uses carrying 200 bits) with the given surface.
    pub fn table1(ris: RisConfig) -> Result<Self> {
        let (omega_bn, omega_nd) = omega_from_geometry(&LinkGeometry::default());
        let noise = NoiseModel::new(290.0, 10e6, db_to_linear(3.0))?.with_sigma_d_sq(db_to_linear(-131.5));
        Ok(Self {
            link_bn: NakagamiLink::new(3.0, omega_bn)?,
            link_nd: NakagamiLink::new(3.0, omega_nd)?,
            ris,
            noise,
            fbl: FblParams::new(500, 200.0)?,
        })
    }

    /// Transmit SNR rho = P / sigma_d^2.
    pub fn rho(&self, tx_power_dbm: f64) -> f64 {
        dbm_to_watts(tx_power_dbm) / self.noise.sigma_d_sq
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()
    }
}
