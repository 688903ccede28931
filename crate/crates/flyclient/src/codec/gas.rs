//! Calldata gas costing for posting proofs to a smart contract.
//!
//! Data-heavy transactions are charged 40 gas per non-zero calldata byte.
//! When only a byte count is known the estimate treats every byte as
//! non-zero, which is flagged as an approximation in the result.

pub const GAS_PER_NONZERO_BYTE: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasQuote {
    pub gas: u64,
    /// True when the all-bytes-non-zero approximation was used.
    pub approximate: bool,
    pub cost_usd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasPrices {
    /// Gas price in Gwei per gas.
    pub gas_price_gwei: f64,
    /// Token price in USD.
    pub token_usd: f64,
}

impl GasPrices {
    pub fn cost_usd(&self, gas: u64) -> f64 {
        gas as f64 * self.gas_price_gwei * 1e-9 * self.token_usd
    }
}

/// Exact gas for a concrete calldata payload.
pub fn gas_for_calldata(data: &[u8], prices: GasPrices) -> GasQuote {
    let nonzero = data.iter().filter(|&&b| b != 0).count() as u64;
    let gas = GAS_PER_NONZERO_BYTE * nonzero;
    GasQuote {
        gas,
        approximate: false,
        cost_usd: prices.cost_usd(gas),
    }
}

/// Approximate gas for a payload known only by size.
pub fn gas_for_size(len: u64, prices: GasPrices) -> GasQuote {
    let gas = GAS_PER_NONZERO_BYTE * len;
    GasQuote {
        gas,
        approximate: true,
        cost_usd: prices.cost_usd(gas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_PRICES: GasPrices = GasPrices {
        gas_price_gwei: 0.125,
        token_usd: 2100.0,
    };

    #[test]
    fn megabyte_scale_quote() {
        let quote = gas_for_size((1.2 * 1024.0 * 1024.0) as u64, PAPER_PRICES);
        assert_eq!(quote.gas, 50_331_648);
        assert!((quote.cost_usd - 13.21).abs() < 0.01);
        assert!(quote.approximate);
    }

    #[test]
    fn zero_bytes_zero_gas() {
        assert_eq!(gas_for_size(0, PAPER_PRICES).gas, 0);
        assert_eq!(gas_for_calldata(&[], PAPER_PRICES).gas, 0);
    }

    #[test]
    fn exact_counting_skips_zero_bytes() {
        let data = [0u8, 1, 2, 0, 3];
        let quote = gas_for_calldata(&data, PAPER_PRICES);
        assert_eq!(quote.gas, 3 * GAS_PER_NONZERO_BYTE);
        assert!(!quote.approximate);
    }

    #[test]
    fn linear_in_size() {
        let a = gas_for_size(1000, PAPER_PRICES);
        let b = gas_for_size(2000, PAPER_PRICES);
        assert_eq!(b.gas, 2 * a.gas);
        assert!((b.cost_usd - 2.0 * a.cost_usd).abs() < 1e-12);
    }
}
