// SPDX-License-Identifier: Apache-2.0
//! System-instruction templates shipped under `prompts/`.

pub const NL_ANALYZER: &str = include_str!("../../../prompts/nl_analyzer.txt");
pub const WAVEFORM_TEMPLATE: &str = include_str!("../../../prompts/waveform_template.txt");
pub const WAVEFORM_DESCRIBE: &str = include_str!("../../../prompts/waveform_describe.txt");
pub const SVA_WIDTH: &str = include_str!("../../../prompts/sva_width.txt");
pub const SVA_CONNECTIVITY: &str = include_str!("../../../prompts/sva_connectivity.txt");
pub const SVA_FUNCTION: &str = include_str!("../../../prompts/sva_function.txt");

/// Replaces each `{{KEY}}` with its value. Unknown placeholders are left alone.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}
