//! Prompt templates, shipped as versioned text assets.

pub const BIRDEYE_SYSTEM: &str = include_str!("../../assets/prompts/birdeye_system.txt");
pub const BIRDEYE_USER: &str = include_str!("../../assets/prompts/birdeye_user.txt");
pub const BIRDEYE_FORMAT: &str = include_str!("../../assets/prompts/birdeye_format.txt");
pub const SBS_SYSTEM: &str = include_str!("../../assets/prompts/sbs_system.txt");
pub const SBS_USER: &str = include_str!("../../assets/prompts/sbs_user.txt");
pub const SBS_FORMAT: &str = include_str!("../../assets/prompts/sbs_format.txt");

/// Substitutes the question into a user template.
pub fn render_user(template: &str, question: &str) -> String {
    template.replace("{user_question}", question)
}
