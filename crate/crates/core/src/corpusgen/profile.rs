use std::collections::BTreeMap;

use super::CorpusError;

pub const SITES: [&str; 4] = ["wcm", "mayo", "nw", "mimic"];

/// Every perturbation the generator knows how to apply, in precedence
/// order: when several quirks hit the same mention the first one wins.
pub const QUIRK_IDS: [&str; 12] = [
    "reference_only_row",
    "reference_range_tabular",
    "semicolon_separator",
    "sclerosis_without_stenosis",
    "doppler_insertion",
    "abbreviated_table_label",
    "missing_space",
    "cross_line_concept",
    "compound_normal_sentence",
    "free_text_only",
    "adjacent_concepts",
    "ea_ratio_row",
];

/// Quirks drawn once per report rather than per concept.
pub const REPORT_LEVEL_QUIRKS: [&str; 2] = ["free_text_only", "ea_ratio_row"];

/// Generator configuration for one institution's report style.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteProfile {
    pub site_tag: String,
    /// (quirk_id, concept_id) → probability; report-level quirks use an
    /// empty concept id.
    pub quirk_rates: BTreeMap<(String, String), f64>,
    /// concept_id → probability that a report mentions the concept.
    pub concept_frequencies: BTreeMap<String, f64>,
}

const AVMG: &str = "aortic-valve-mean-gradient";
const AVA: &str = "aortic-valve-orifice-area";
const AR: &str = "aortic-valve-regurgitation";
const ARPV: &str = "aortic-valve-regurgitation-peak-velocity";
const AS: &str = "aortic-valve-stenosis";
const EE: &str = "e-e-prime-ratio";
const IVSD: &str = "interventricular-septum-dimension-end-diastole";
const LA: &str = "left-atrium-size-end-systole";
const LVIDD: &str = "left-ventricular-dimension-end-diastole";
const LVIDS: &str = "left-ventricular-dimension-end-systole";
const LVSIZE: &str = "left-ventricular-size";
const LVEF: &str = "left-ventricular-ejection-fraction";
const LVPW: &str = "left-ventricular-posterior-wall-thickness-end-diastole";
const MVMG: &str = "mitral-valve-mean-gradient";
const MVA: &str = "mitral-valve-orifice-area";
const MR: &str = "mitral-valve-regurgitation";
const MRPV: &str = "mitral-valve-regurgitation-peak-velocity";
const MS: &str = "mitral-valve-stenosis";
const PASP: &str = "pulmonary-artery-pressure";
const RAP: &str = "right-atrial-pressure";
const TVMG: &str = "tricuspid-valve-mean-gradient";
const TVA: &str = "tricuspid-valve-orifice-area";
const TR: &str = "tricuspid-valve-regurgitation";
const TRPV: &str = "tricuspid-valve-regurgitation-peak-velocity";

/// The 24 evaluated concepts in table order.
pub const EVALUATED: [&str; 24] = [
    AVMG, AVA, AR, ARPV, AS, EE, IVSD, LA, LVIDD, LVIDS, LVSIZE, LVEF, LVPW, MVMG, MVA, MR, MRPV, MS, PASP, RAP,
    TVMG, TVA, TR, TRPV,
];

const FREQUENT: f64 = 0.9;
const OCCASIONAL: f64 = 0.3;

impl SiteProfile {
    /// Shipped defaults. Frequencies are guesses shaped by which concepts
    /// each site reports often, rarely, or never.
    pub fn builtin(site_tag: &str) -> Option<SiteProfile> {
        // concepts every site reports often
        let common = [AR, AS, LVSIZE, LVEF, MR, PASP, TR, LA, RAP];
        type Rates<'a> = &'a [(&'a str, &'a str, f64)];
        let (frequent, absent, quirks): (&[&str], &[&str], Rates) = match site_tag {
            "wcm" => (
                &[AVMG, AVA, IVSD, LVIDD, LVIDS, MVA],
                &[ARPV, MVMG, MRPV, TVMG, TVA],
                &[
                    ("reference_range_tabular", AVA, 0.5),
                    ("reference_only_row", AVA, 0.23),
                    ("reference_only_row", MVA, 0.94),
                    ("reference_only_row", LVEF, 0.02),
                    ("ea_ratio_row", "", 0.2),
                    ("cross_line_concept", RAP, 0.3),
                ],
            ),
            "mayo" => (
                &[AVMG, MS],
                &[ARPV, MVA, MRPV, TVMG, TVA],
                &[
                    ("semicolon_separator", LVEF, 0.45),
                    ("sclerosis_without_stenosis", MS, 0.58),
                    ("sclerosis_without_stenosis", AS, 0.47),
                    ("doppler_insertion", AVMG, 0.5),
                    ("cross_line_concept", RAP, 0.3),
                ],
            ),
            "nw" => (
                &[AVA, LVIDD, LVIDS],
                &[ARPV],
                &[
                    ("abbreviated_table_label", LVIDS, 0.5),
                    ("abbreviated_table_label", LVIDD, 0.5),
                    ("missing_space", AVA, 0.3),
                    ("compound_normal_sentence", LVSIZE, 0.5),
                    ("cross_line_concept", RAP, 0.3),
                ],
            ),
            "mimic" => (
                &[AVA],
                &[AVMG, ARPV, LVIDS, MVMG, MVA, MRPV, TVMG, TVA],
                &[
                    ("free_text_only", "", 1.0),
                    ("adjacent_concepts", AVA, 0.5),
                    ("cross_line_concept", RAP, 0.3),
                ],
            ),
            _ => return None,
        };
        let concept_frequencies = EVALUATED
            .iter()
            .map(|&c| {
                let f = if absent.contains(&c) {
                    0.0
                } else if common.contains(&c) || frequent.contains(&c) {
                    FREQUENT
                } else {
                    OCCASIONAL
                };
                (c.to_string(), f)
            })
            .collect();
        let quirk_rates = quirks
            .iter()
            .map(|&(q, c, p)| ((q.to_string(), c.to_string()), p))
            .collect();
        Some(SiteProfile {
            site_tag: site_tag.to_string(),
            quirk_rates,
            concept_frequencies,
        })
    }

    pub fn quirk_rate(&self, quirk_id: &str, concept_id: &str) -> Option<f64> {
        self.quirk_rates
            .get(&(quirk_id.to_string(), concept_id.to_string()))
            .copied()
    }

    pub fn set_quirk_rate(&mut self, quirk_id: &str, concept_id: &str, rate: f64) {
        self.quirk_rates
            .insert((quirk_id.to_string(), concept_id.to_string()), rate);
    }

    /// Quirks configured for a concept, in catalog order.
    pub fn concept_quirks(&self, concept_id: &str) -> Vec<(&'static str, f64)> {
        QUIRK_IDS
            .iter()
            .filter_map(|&q| self.quirk_rate(q, concept_id).map(|p| (q, p)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for ((q, c), &p) in &self.quirk_rates {
            if !QUIRK_IDS.contains(&q.as_str()) {
                return Err(CorpusError::UnknownQuirk(q.clone()));
            }
            if REPORT_LEVEL_QUIRKS.contains(&q.as_str()) != c.is_empty() {
                return Err(CorpusError::Profile(format!(
                    "quirk `{q}` has the wrong scope for concept `{c}`"
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(CorpusError::Profile(format!("rate {p} for `{q}` is not a probability")));
            }
        }
        for (c, &p) in &self.concept_frequencies {
            if !(0.0..=1.0).contains(&p) {
                return Err(CorpusError::Profile(format!("frequency {p} for `{c}` is not a probability")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for s in SITES {
            let p = SiteProfile::builtin(s).unwrap();
            p.validate().unwrap();
            assert_eq!(p.concept_frequencies.len(), 24);
        }
        assert!(SiteProfile::builtin("elsewhere").is_none());
    }

    #[test]
    fn tricuspid_area_only_at_nw() {
        for s in SITES {
            let f = SiteProfile::builtin(s).unwrap().concept_frequencies[TVA];
            assert_eq!(f > 0.0, s == "nw");
        }
    }

    #[test]
    fn rejects_bad_rates() {
        let mut p = SiteProfile::builtin("wcm").unwrap();
        p.set_quirk_rate("semicolon_separator", LVEF, 1.5);
        assert!(p.validate().is_err());
        let mut p = SiteProfile::builtin("wcm").unwrap();
        p.set_quirk_rate("made_up", LVEF, 0.5);
        assert!(matches!(p.validate(), Err(CorpusError::UnknownQuirk(_))));
    }
}
