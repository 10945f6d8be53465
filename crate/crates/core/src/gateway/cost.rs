//! Token and monetary cost accounting over recorded exchanges.

use super::LlmExchange;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Prices per 1000 tokens, keyed by provider tag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PriceTable {
    pub prices: BTreeMap<String, PricePer1k>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PricePer1k {
    pub input: f64,
    pub output: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemplateCost {
    pub calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub per_template: BTreeMap<String, TemplateCost>,
    pub total: TemplateCost,
}

/// Pure aggregation of exchanges into a cost report.
pub fn accumulate_cost(exchanges: &[LlmExchange], prices: &PriceTable) -> CostReport {
    let mut report = CostReport::default();
    for e in exchanges {
        let price = prices.prices.get(&e.provider_tag).copied().unwrap_or_default();
        let cost = e.tokens_in as f64 / 1000.0 * price.input
            + e.tokens_out as f64 / 1000.0 * price.output;
        let entry = report.per_template.entry(e.template_id.clone()).or_default();
        entry.calls += 1;
        entry.tokens_in += e.tokens_in;
        entry.tokens_out += e.tokens_out;
        entry.cost += cost;
        report.total.calls += 1;
        report.total.tokens_in += e.tokens_in;
        report.total.tokens_out += e.tokens_out;
        report.total.cost += cost;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchange(template: &str, tokens_in: u64, tokens_out: u64) -> LlmExchange {
        LlmExchange {
            template_id: template.to_string(),
            rendered_prompt: String::new(),
            response: String::new(),
            provider_tag: "stub".to_string(),
            temperature: 0.2,
            tokens_in,
            tokens_out,
            key: String::new(),
            timestamp: 0,
        }
    }

    #[test]
    fn empty_list_gives_zero_totals() {
        let report = accumulate_cost(&[], &PriceTable::default());
        assert_eq!(report.total, TemplateCost::default());
        assert!(report.per_template.is_empty());
    }

    #[test]
    fn two_exchanges_sum() {
        let report = accumulate_cost(
            &[exchange("a", 100, 50), exchange("b", 100, 50)],
            &PriceTable::default(),
        );
        assert_eq!(report.total.tokens_in, 200);
        assert_eq!(report.total.tokens_out, 100);
        assert_eq!(report.total.calls, 2);
    }

    #[test]
    fn priced_totals() {
        let mut prices = PriceTable::default();
        prices.prices.insert(
            "stub".to_string(),
            PricePer1k {
                input: 1.0,
                output: 2.0,
            },
        );
        let report = accumulate_cost(&[exchange("a", 1000, 500)], &prices);
        assert!((report.total.cost - 2.0).abs() < 1e-9);
    }
}
