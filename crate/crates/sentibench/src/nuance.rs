//! Linguistic-nuance tagging, manual annotations, per-category
//! performance breakdowns, and reasoning extraction.
//!
//! Five of the seven categories have automatic taggers (emoji, slang,
//! hashtags, contrast-word candidates for mixed sentiment, and modern
//! abbreviations). Negation & sarcasm and cultural context have no
//! heuristic tagger — detecting them mechanically would overstate what
//! the tooling can do — so they come exclusively from manual annotation
//! files, which can also confirm or extend any automatic category.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;
use unicode_properties::{EmojiStatus, UnicodeEmoji};

use crate::corpus::{Dataset, SentimentLabel, Tweet};
use crate::gateway::prompts::render_reasoning_prompt;
use crate::gateway::{Gateway, GatewayError, Message, PredictedLabel, Prediction};
use crate::metrics::{evaluate_pairs, EvaluationReport};

/// The seven nuance categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NuanceCategory {
    Emoji,
    Slang,
    Hashtag,
    NegationSarcasm,
    MixedSentiment,
    CulturalContext,
    ModernAbbreviation,
}

impl NuanceCategory {
    pub const ALL: [NuanceCategory; 7] = [
        NuanceCategory::Emoji,
        NuanceCategory::Slang,
        NuanceCategory::Hashtag,
        NuanceCategory::NegationSarcasm,
        NuanceCategory::MixedSentiment,
        NuanceCategory::CulturalContext,
        NuanceCategory::ModernAbbreviation,
    ];

    /// Canonical name used in annotation files and reports.
    pub fn canonical_name(self) -> &'static str {
        match self {
            NuanceCategory::Emoji => "Emoji",
            NuanceCategory::Slang => "Slang",
            NuanceCategory::Hashtag => "Hashtag",
            NuanceCategory::NegationSarcasm => "NegationSarcasm",
            NuanceCategory::MixedSentiment => "MixedSentiment",
            NuanceCategory::CulturalContext => "CulturalContext",
            NuanceCategory::ModernAbbreviation => "ModernAbbreviation",
        }
    }
}

impl fmt::Display for NuanceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for NuanceCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NuanceCategory::ALL
            .into_iter()
            .find(|c| c.canonical_name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!(
                    "unknown nuance category {:?}; expected one of Emoji, Slang, Hashtag, \
                     NegationSarcasm, MixedSentiment, CulturalContext, ModernAbbreviation",
                    s
                )
            })
    }
}

/// Whether a tag set was produced by the taggers or a human.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TagSource {
    Automatic,
    Manual,
}

/// Every nuance tag attached to one tweet. `source` is `Manual` as soon
/// as any human annotation contributed; automatic categories always
/// carry evidence, manual ones may not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuanceTagSet {
    pub tweet_id: String,
    pub categories: BTreeSet<NuanceCategory>,
    pub evidence: BTreeMap<NuanceCategory, Vec<String>>,
    pub source: TagSource,
}

impl NuanceTagSet {
    pub fn new(tweet_id: impl Into<String>, source: TagSource) -> Self {
        NuanceTagSet {
            tweet_id: tweet_id.into(),
            categories: BTreeSet::new(),
            evidence: BTreeMap::new(),
            source,
        }
    }

    /// Adds a category; evidence accumulates across calls.
    pub fn add(&mut self, category: NuanceCategory, evidence: Vec<String>) {
        self.categories.insert(category);
        self.evidence.entry(category).or_default().extend(evidence);
    }

    pub fn contains(&self, category: NuanceCategory) -> bool {
        self.categories.contains(&category)
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// Nuance-module failures.
#[derive(Debug, Error)]
pub enum NuanceError {
    #[error("io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon {name:?}: {reason}")]
    InvalidLexicon { name: String, reason: String },
    #[error("annotation file row {row}: {reason}")]
    MalformedAnnotation { row: usize, reason: String },
    #[error("annotation file row {row}: unknown category {name:?}")]
    UnknownCategory { row: usize, name: String },
    #[error("annotation file row {row}: tweet id {id:?} is not in the dataset")]
    UnknownTweetId { row: usize, id: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

// -------------------------------------------------------------------
// Automatic taggers.
// -------------------------------------------------------------------

/// `Emoji=YES` code points that render as emoji without a variation
/// selector.
fn has_default_emoji_presentation(status: EmojiStatus) -> bool {
    matches!(
        status,
        EmojiStatus::EmojiPresentation
            | EmojiStatus::EmojiPresentationAndModifierBase
            | EmojiStatus::EmojiPresentationAndEmojiComponent
            | EmojiStatus::EmojiPresentationAndModifierAndEmojiComponent
    )
}

/// Returns the pictographic emoji in `text`: code points with default
/// emoji presentation, plus emoji-property characters explicitly styled
/// with U+FE0F. ASCII emoticons like ":)" are not Unicode emoji and
/// never match.
pub fn tag_emoji(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut evidence = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        if has_default_emoji_presentation(c.emoji_status()) {
            evidence.push(c.to_string());
        } else if c.is_emoji_char() && chars.get(i + 1) == Some(&'\u{FE0F}') {
            let mut styled = c.to_string();
            styled.push('\u{FE0F}');
            evidence.push(styled);
        }
    }
    evidence
}

fn hashtag_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"#\w+").expect("valid regex"))
}

/// Returns maximal `#word` tokens; a bare `#` does not count.
pub fn tag_hashtag(text: &str) -> Vec<String> {
    hashtag_pattern()
        .find_iter(text)
        .map(|m| m.as_str().to_string())
        .collect()
}

/// A named set of case-folded phrases matched at word boundaries.
#[derive(Clone, Debug)]
pub struct Lexicon {
    name: String,
    entries: BTreeSet<String>,
    pattern: Regex,
}

impl Lexicon {
    /// Builds a lexicon; entries are case-folded and deduplicated.
    pub fn new(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, NuanceError> {
        let name = name.into();
        let mut folded = BTreeSet::new();
        for entry in entries {
            let entry = entry.into();
            if entry.trim().is_empty() {
                return Err(NuanceError::InvalidLexicon {
                    name,
                    reason: "entries must not be blank".into(),
                });
            }
            folded.insert(entry.trim().to_lowercase());
        }
        if folded.is_empty() {
            return Err(NuanceError::InvalidLexicon {
                name,
                reason: "lexicon has no entries".into(),
            });
        }

        // Longest-first alternation so an entry that extends another
        // ("the dog's bollocks" vs "dog's bollocks") wins the match.
        let mut ordered: Vec<&String> = folded.iter().collect();
        ordered.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let alternation = ordered
            .iter()
            .map(|e| regex::escape(e))
            .collect::<Vec<_>>()
            .join("|");
        let pattern = Regex::new(&format!(r"(?i)\b(?:{alternation})\b"))
            .map_err(|e| NuanceError::InvalidLexicon {
                name: name.clone(),
                reason: e.to_string(),
            })?;

        Ok(Lexicon {
            name,
            entries: folded,
            pattern,
        })
    }

    /// Loads one phrase per line; blank lines and `#` comments are
    /// skipped.
    pub fn from_file(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self, NuanceError> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| NuanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<&str> = content
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .collect();
        Lexicon::new(name, entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.entries.contains(&phrase.to_lowercase())
    }
}

/// Case-insensitive whole-word/phrase matches; evidence is the verbatim
/// slice of the input.
pub fn tag_lexicon(text: &str, lexicon: &Lexicon) -> Vec<String> {
    lexicon
        .pattern
        .find_iter(text)
        .map(|m| m.as_str().to_string())
        .collect()
}

/// The 22 modern abbreviations with their expansions, as commonly listed
/// for social-media text.
pub const ABBREVIATIONS: [(&str, &str); 22] = [
    ("TBH", "To Be Honest"),
    ("ICYMI", "In Case You Missed It"),
    ("FOMO", "Fear Of Missing Out"),
    ("YOLO", "You Only Live Once"),
    ("SMA", "Social Media Addict"),
    ("OMW", "On My Way"),
    ("TIL", "Today I Learned"),
    ("AMA", "Ask Me Anything"),
    ("ELI5", "Explain Like I'm 5"),
    ("DM", "Direct Message"),
    ("SMH", "Shaking My Head"),
    ("IRL", "In Real Life"),
    ("BAE", "Before Anyone Else"),
    ("OOMF", "One Of My Friends/Followers"),
    ("NSFW", "Not Safe For Work"),
    ("TL;DR", "Too Long; Didn't Read"),
    ("WYD", "What You Doing"),
    ("FTW", "For The Win"),
    ("NFT", "Non-Fungible Token"),
    ("RN", "Right Now"),
    ("OOTD", "Outfit Of The Day"),
    ("NGL", "Not Gonna Lie"),
];

/// Built-in slang idioms. Article-bearing variants are listed alongside
/// the bare idioms so the evidence spans the full phrase as people
/// actually write it.
pub fn default_slang() -> Lexicon {
    Lexicon::new(
        "slang",
        [
            "the bee's knees",
            "cat's pajamas",
            "the cat's pajamas",
            "dog's bollocks",
            "the dog's bollocks",
            "duck's nuts",
            "the duck's nuts",
            "real mccoy",
            "the real mccoy",
            "backhanded compliment",
            "throw someone under the bus",
            "a wolf in sheep's clothing",
        ],
    )
    .expect("built-in lexicon is valid")
}

/// Built-in abbreviation lexicon from [`ABBREVIATIONS`].
pub fn default_abbreviations() -> Lexicon {
    Lexicon::new("abbreviations", ABBREVIATIONS.map(|(abbr, _)| abbr))
        .expect("built-in lexicon is valid")
}

/// Contrast conjunctions that mark a tweet as a mixed-sentiment
/// candidate.
pub const DEFAULT_CONTRAST_WORDS: [&str; 6] =
    ["but", "however", "although", "though", "yet", "whereas"];

fn default_contrast_lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(|| {
        Lexicon::new("contrast", DEFAULT_CONTRAST_WORDS).expect("built-in lexicon is valid")
    })
}

/// Contrast matches with a custom conjunction list; evidence is
/// lowercased (the conjunction itself, not its casing, is the signal).
pub fn tag_contrast_with(text: &str, contrast: &Lexicon) -> Vec<String> {
    tag_lexicon(text, contrast)
        .into_iter()
        .map(|m| m.to_lowercase())
        .collect()
}

/// Contrast matches against the default conjunction list.
pub fn tag_contrast(text: &str) -> Vec<String> {
    tag_contrast_with(text, default_contrast_lexicon())
}

/// The lexicons the automatic taggers draw from.
#[derive(Clone, Debug)]
pub struct LexiconSet {
    pub slang: Lexicon,
    pub abbreviations: Lexicon,
    pub contrast: Lexicon,
}

impl Default for LexiconSet {
    fn default() -> Self {
        LexiconSet {
            slang: default_slang(),
            abbreviations: default_abbreviations(),
            contrast: default_contrast_lexicon().clone(),
        }
    }
}

// -------------------------------------------------------------------
// Manual annotations and dataset tagging.
// -------------------------------------------------------------------

/// Loads a manual-annotation CSV (`id,category` header). Rows merge by
/// tweet id; when `dataset` is given, ids are cross-checked against it.
pub fn load_manual_annotations(
    path: impl AsRef<Path>,
    dataset: Option<&Dataset>,
) -> Result<BTreeMap<String, NuanceTagSet>, NuanceError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => NuanceError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => NuanceError::MalformedAnnotation {
                row: 1,
                reason: e.to_string(),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| NuanceError::MalformedAnnotation {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "category"] {
        return Err(NuanceError::MalformedAnnotation {
            row: 1,
            reason: format!(
                "expected header \"id,category\", found {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let known_ids: Option<HashSet<&str>> =
        dataset.map(|ds| ds.tweets.iter().map(|t| t.id.as_str()).collect());

    let mut tags: BTreeMap<String, NuanceTagSet> = BTreeMap::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 2; // header occupies line 1
        let record = record.map_err(|e| NuanceError::MalformedAnnotation {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(NuanceError::MalformedAnnotation {
                row,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(NuanceError::MalformedAnnotation {
                row,
                reason: "empty tweet id".into(),
            });
        }
        let category: NuanceCategory =
            record[1]
                .parse()
                .map_err(|_| NuanceError::UnknownCategory {
                    row,
                    name: record[1].to_string(),
                })?;
        if let Some(ids) = &known_ids {
            if !ids.contains(id.as_str()) {
                return Err(NuanceError::UnknownTweetId { row, id });
            }
        }
        tags.entry(id.clone())
            .or_insert_with(|| NuanceTagSet::new(id, TagSource::Manual))
            .add(category, Vec::new());
    }
    Ok(tags)
}

/// Runs every automatic tagger on one tweet text.
fn tag_text(text: &str, lexicons: &LexiconSet) -> Vec<(NuanceCategory, Vec<String>)> {
    let mut found = Vec::new();
    let mut push = |category, evidence: Vec<String>| {
        if !evidence.is_empty() {
            found.push((category, evidence));
        }
    };
    push(NuanceCategory::Emoji, tag_emoji(text));
    push(NuanceCategory::Slang, tag_lexicon(text, &lexicons.slang));
    push(NuanceCategory::Hashtag, tag_hashtag(text));
    push(
        NuanceCategory::MixedSentiment,
        tag_contrast_with(text, &lexicons.contrast),
    );
    push(
        NuanceCategory::ModernAbbreviation,
        tag_lexicon(text, &lexicons.abbreviations),
    );
    found
}

/// Tags a whole dataset: the union of automatic matches and manual
/// annotations. Tweets with no tags are absent from the map; a set that
/// received any manual tag reports `TagSource::Manual`.
pub fn tag_dataset(
    dataset: &Dataset,
    lexicons: &LexiconSet,
    manual: &BTreeMap<String, NuanceTagSet>,
) -> BTreeMap<String, NuanceTagSet> {
    let mut tags: BTreeMap<String, NuanceTagSet> = BTreeMap::new();
    for tweet in &dataset.tweets {
        let found = tag_text(&tweet.text, lexicons);
        if found.is_empty() {
            continue;
        }
        let set = tags
            .entry(tweet.id.clone())
            .or_insert_with(|| NuanceTagSet::new(tweet.id.clone(), TagSource::Automatic));
        for (category, evidence) in found {
            set.add(category, evidence);
        }
    }
    for (id, manual_set) in manual {
        let set = tags
            .entry(id.clone())
            .or_insert_with(|| NuanceTagSet::new(id.clone(), TagSource::Manual));
        set.source = TagSource::Manual;
        for category in &manual_set.categories {
            let evidence = manual_set.evidence.get(category).cloned().unwrap_or_default();
            set.add(*category, evidence);
        }
    }
    tags
}

// -------------------------------------------------------------------
// Per-category breakdowns and reasoning extraction.
// -------------------------------------------------------------------

/// One category's slice of the evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryBreakdown {
    pub category: NuanceCategory,
    /// Tweets carrying this tag that had both a gold label and a
    /// prediction.
    pub tweet_count: u64,
    pub report: EvaluationReport,
}

impl CategoryBreakdown {
    pub fn is_empty(&self) -> bool {
        self.tweet_count == 0
    }
}

/// Evaluates each category over the tweets tagged with it. All seven
/// categories are always present; untagged ones carry an empty report.
pub fn nuance_breakdown(
    predictions: &BTreeMap<String, PredictedLabel>,
    gold: &BTreeMap<String, SentimentLabel>,
    tags: &BTreeMap<String, NuanceTagSet>,
) -> BTreeMap<NuanceCategory, CategoryBreakdown> {
    NuanceCategory::ALL
        .into_iter()
        .map(|category| {
            let pairs: Vec<(SentimentLabel, PredictedLabel)> = tags
                .values()
                .filter(|set| set.contains(category))
                .filter_map(|set| {
                    let g = gold.get(&set.tweet_id)?;
                    let p = predictions.get(&set.tweet_id)?;
                    Some((*g, *p))
                })
                .collect();
            let breakdown = CategoryBreakdown {
                category,
                tweet_count: pairs.len() as u64,
                report: evaluate_pairs(&pairs),
            };
            (category, breakdown)
        })
        .collect()
}

/// Renders a breakdown as CSV with one row per (category, metric).
pub fn breakdown_to_csv(breakdown: &BTreeMap<NuanceCategory, CategoryBreakdown>) -> String {
    let mut out = String::from("category,metric,value\n");
    for category in NuanceCategory::ALL {
        let Some(cell) = breakdown.get(&category) else {
            continue;
        };
        let _ = writeln!(out, "{category},tweet_count,{}", cell.tweet_count);
        let mut metric = |name: &str, value: f64| {
            let _ = writeln!(out, "{category},{name},{value:.6}");
        };
        metric("accuracy", cell.report.accuracy);
        metric("macro_recall", cell.report.macro_recall);
        metric("macro_f1", cell.report.macro_f1);
        metric("f1_pn", cell.report.f1_pn);
        metric("mixed_rate", cell.report.mixed_rate);
        metric("unparseable_rate", cell.report.unparseable_rate);
    }
    out
}

/// Asks the backend to explain the sentiment of one tweet; the response
/// is returned verbatim, never parsed into a label.
pub fn extract_reasoning(gateway: &Gateway, tweet: &Tweet) -> Result<String, NuanceError> {
    let prompt = render_reasoning_prompt(&tweet.text)?;
    Ok(gateway.chat_complete(&[Message::user(prompt)])?)
}

/// Runs [`extract_reasoning`] and stores the text on the prediction.
pub fn attach_reasoning(
    gateway: &Gateway,
    tweet: &Tweet,
    prediction: &mut Prediction,
) -> Result<(), NuanceError> {
    prediction.reasoning = Some(extract_reasoning(gateway, tweet)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::gateway::BackendConfig;

    #[test]
    fn emoji_tagger_matches_pictographs_only() {
        assert_eq!(tag_emoji("great day \u{1F600}"), vec!["\u{1F600}"]);
        assert_eq!(tag_emoji("plain text"), Vec::<String>::new());
        assert_eq!(tag_emoji("x :) y"), Vec::<String>::new());
    }

    #[test]
    fn emoji_with_variation_selector_is_tagged() {
        // U+2764 HEAVY BLACK HEART is text-presentation by default and
        // only counts when styled with U+FE0F.
        assert_eq!(tag_emoji("I \u{2764}\u{FE0F} it"), vec!["\u{2764}\u{FE0F}"]);
        assert_eq!(tag_emoji("I \u{2764} it"), Vec::<String>::new());
    }

    #[test]
    fn plain_digits_are_not_emoji() {
        assert_eq!(tag_emoji("call 555 now"), Vec::<String>::new());
    }

    #[test]
    fn multiple_emoji_all_show_up_in_order() {
        let evidence = tag_emoji("\u{1F600} mid \u{1F62D}");
        assert_eq!(evidence, vec!["\u{1F600}", "\u{1F62D}"]);
    }

    #[test]
    fn hashtag_tagger_matches_maximal_tokens() {
        assert_eq!(tag_hashtag("Just aced my test. #dead"), vec!["#dead"]);
        assert_eq!(tag_hashtag("a # b"), Vec::<String>::new());
        assert_eq!(tag_hashtag("#A #B"), vec!["#A", "#B"]);
        assert_eq!(tag_hashtag("#NotMyPresident!"), vec!["#NotMyPresident"]);
    }

    #[test]
    fn slang_lexicon_matches_the_full_article_form() {
        let slang = default_slang();
        assert_eq!(
            tag_lexicon("She called the new product the dog's bollocks.", &slang),
            vec!["the dog's bollocks"]
        );
        assert_eq!(
            tag_lexicon("that gig was The Bee's Knees!", &slang),
            vec!["The Bee's Knees"],
            "evidence keeps the text's own casing"
        );
    }

    #[test]
    fn lexicon_respects_word_boundaries() {
        let lexicon = Lexicon::new("test", ["table"]).unwrap();
        assert_eq!(tag_lexicon("stable", &lexicon), Vec::<String>::new());
        assert_eq!(tag_lexicon("a table!", &lexicon), vec!["table"]);
    }

    #[test]
    fn every_abbreviation_is_detected_in_a_carrier_sentence() {
        let lexicon = default_abbreviations();
        assert_eq!(ABBREVIATIONS.len(), 22);
        for (abbr, _) in ABBREVIATIONS {
            let sentence = format!("honestly {abbr} sums it up");
            assert_eq!(
                tag_lexicon(&sentence, &lexicon),
                vec![abbr],
                "{abbr} not detected"
            );
        }
    }

    #[test]
    fn abbreviation_lexicon_is_case_insensitive() {
        let lexicon = default_abbreviations();
        assert_eq!(tag_lexicon("tbh that was fine", &lexicon), vec!["tbh"]);
        assert_eq!(tag_lexicon("TBH that was fine", &lexicon), vec!["TBH"]);
    }

    #[test]
    fn short_abbreviations_do_not_match_inside_words() {
        let lexicon = default_abbreviations();
        assert_eq!(tag_lexicon("burn the barn", &lexicon), Vec::<String>::new());
        assert_eq!(tag_lexicon("admire them", &lexicon), Vec::<String>::new());
        assert_eq!(tag_lexicon("rn I'm busy", &lexicon), vec!["rn"]);
    }

    #[test]
    fn contrast_tagger_matches_the_mixed_sentiment_example() {
        let evidence =
            tag_contrast("I really love the camera on this new phone, but the battery life is awful");
        assert_eq!(evidence, vec!["but"]);
        assert_eq!(tag_contrast("butter"), Vec::<String>::new());
        assert_eq!(tag_contrast("Yet again"), vec!["yet"]);
        assert_eq!(tag_contrast("Although fine, it lags"), vec!["although"]);
    }

    #[test]
    fn lexicon_construction_rejects_bad_inputs() {
        assert!(matches!(
            Lexicon::new("empty", Vec::<String>::new()),
            Err(NuanceError::InvalidLexicon { .. })
        ));
        assert!(matches!(
            Lexicon::new("blank", ["  "]),
            Err(NuanceError::InvalidLexicon { .. })
        ));
    }

    #[test]
    fn lexicon_file_skips_comments_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slang.txt");
        std::fs::write(&path, "# house style\nthe bee's knees\n\n  chuffed\n").unwrap();
        let lexicon = Lexicon::from_file("custom", &path).unwrap();
        assert_eq!(lexicon.len(), 2);
        assert!(lexicon.contains("chuffed"));
        assert!(lexicon.contains("The Bee's Knees"));
        assert_eq!(tag_lexicon("well chuffed today", &lexicon), vec!["chuffed"]);
    }

    #[test]
    fn category_names_round_trip_and_reject_unknowns() {
        for category in NuanceCategory::ALL {
            assert_eq!(
                category.canonical_name().parse::<NuanceCategory>().unwrap(),
                category
            );
        }
        assert_eq!(
            "culturalcontext".parse::<NuanceCategory>().unwrap(),
            NuanceCategory::CulturalContext
        );
        assert!("Sarcasm".parse::<NuanceCategory>().is_err());
    }

    fn sample_dataset() -> Dataset {
        let tweets = vec![
            Tweet::labeled("1", "great start \u{1F600} #monday", SentimentLabel::Positive),
            Tweet::labeled(
                "2",
                "She called the new product the dog's bollocks.",
                SentimentLabel::Positive,
            ),
            Tweet::labeled("3", "TBH the update broke everything", SentimentLabel::Negative),
            Tweet::labeled(
                "4",
                "love the camera, but the battery life is awful",
                SentimentLabel::Neutral,
            ),
            Tweet::labeled("5", "completely ordinary sentence", SentimentLabel::Neutral),
            Tweet::labeled("6", "oh sure, fantastic work as always", SentimentLabel::Negative),
        ];
        Dataset::new(Split::Test, tweets).unwrap()
    }

    #[test]
    fn manual_annotations_load_and_merge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manual.csv");
        std::fs::write(&path, "id,category\n6,NegationSarcasm\n6,CulturalContext\n").unwrap();
        let manual = load_manual_annotations(&path, None).unwrap();
        assert_eq!(manual.len(), 1);
        let set = &manual["6"];
        assert_eq!(set.source, TagSource::Manual);
        assert!(set.contains(NuanceCategory::NegationSarcasm));
        assert!(set.contains(NuanceCategory::CulturalContext));
    }

    #[test]
    fn manual_annotation_errors_carry_row_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manual.csv");
        std::fs::write(&path, "id,category\n6,Emoji\n6,Sarcasm\n").unwrap();
        let err = load_manual_annotations(&path, None).unwrap_err();
        assert!(
            matches!(err, NuanceError::UnknownCategory { row: 3, ref name } if name == "Sarcasm"),
            "{err}"
        );

        std::fs::write(&path, "id,category\n99,Emoji\n").unwrap();
        let dataset = sample_dataset();
        let err = load_manual_annotations(&path, Some(&dataset)).unwrap_err();
        assert!(
            matches!(err, NuanceError::UnknownTweetId { row: 2, ref id } if id == "99"),
            "{err}"
        );

        std::fs::write(&path, "tweet,tag\n1,Emoji\n").unwrap();
        assert!(matches!(
            load_manual_annotations(&path, None).unwrap_err(),
            NuanceError::MalformedAnnotation { row: 1, .. }
        ));
    }

    #[test]
    fn empty_annotation_file_yields_no_tags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manual.csv");
        std::fs::write(&path, "id,category\n").unwrap();
        assert!(load_manual_annotations(&path, None).unwrap().is_empty());
    }

    #[test]
    fn dataset_tagging_unions_automatic_and_manual() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manual.csv");
        std::fs::write(&path, "id,category\n6,NegationSarcasm\n").unwrap();
        let manual = load_manual_annotations(&path, Some(&dataset)).unwrap();
        let tags = tag_dataset(&dataset, &LexiconSet::default(), &manual);

        let t1 = &tags["1"];
        assert!(t1.contains(NuanceCategory::Emoji));
        assert!(t1.contains(NuanceCategory::Hashtag));
        assert_eq!(t1.source, TagSource::Automatic);
        assert_eq!(t1.evidence[&NuanceCategory::Hashtag], vec!["#monday"]);

        assert!(tags["2"].contains(NuanceCategory::Slang));
        assert!(tags["3"].contains(NuanceCategory::ModernAbbreviation));
        assert!(tags["4"].contains(NuanceCategory::MixedSentiment));

        let t6 = &tags["6"];
        assert_eq!(
            t6.categories.iter().copied().collect::<Vec<_>>(),
            vec![NuanceCategory::NegationSarcasm]
        );
        assert_eq!(t6.source, TagSource::Manual);

        assert!(!tags.contains_key("5"), "untagged tweets stay absent");
    }

    #[test]
    fn automatic_evidence_is_locatable_in_the_text() {
        let dataset = sample_dataset();
        let tags = tag_dataset(&dataset, &LexiconSet::default(), &BTreeMap::new());
        for set in tags.values() {
            let tweet = dataset
                .tweets
                .iter()
                .find(|t| t.id == set.tweet_id)
                .unwrap();
            let haystack = tweet.text.to_lowercase();
            for (category, evidence) in &set.evidence {
                assert!(!evidence.is_empty(), "{category} has no evidence");
                for item in evidence {
                    assert!(
                        haystack.contains(&item.to_lowercase()),
                        "{category} evidence {item:?} not in {:?}",
                        tweet.text
                    );
                }
            }
        }
    }

    #[test]
    fn breakdown_matches_hand_tallies_and_lists_all_categories() {
        let dataset = sample_dataset();
        let tags = tag_dataset(&dataset, &LexiconSet::default(), &BTreeMap::new());
        let gold: BTreeMap<String, SentimentLabel> = dataset
            .tweets
            .iter()
            .map(|t| (t.id.clone(), t.gold.unwrap()))
            .collect();
        // Planted errors: tweet 1 (Emoji+Hashtag) wrong, the rest right.
        let mut predictions = BTreeMap::new();
        predictions.insert("1".to_string(), PredictedLabel::Negative);
        predictions.insert("2".to_string(), PredictedLabel::Positive);
        predictions.insert("3".to_string(), PredictedLabel::Negative);
        predictions.insert("4".to_string(), PredictedLabel::Neutral);

        let breakdown = nuance_breakdown(&predictions, &gold, &tags);
        assert_eq!(breakdown.len(), 7, "all categories reported");

        assert_eq!(breakdown[&NuanceCategory::Emoji].tweet_count, 1);
        assert_eq!(breakdown[&NuanceCategory::Emoji].report.accuracy, 0.0);
        assert_eq!(breakdown[&NuanceCategory::Slang].report.accuracy, 1.0);
        assert_eq!(breakdown[&NuanceCategory::ModernAbbreviation].report.accuracy, 1.0);
        assert_eq!(breakdown[&NuanceCategory::MixedSentiment].report.accuracy, 1.0);
        assert!(breakdown[&NuanceCategory::NegationSarcasm].is_empty());
        assert!(breakdown[&NuanceCategory::CulturalContext].is_empty());
        assert_eq!(breakdown[&NuanceCategory::CulturalContext].report.total, 0);
    }

    #[test]
    fn breakdown_csv_has_one_row_per_category_metric() {
        let breakdown = nuance_breakdown(&BTreeMap::new(), &BTreeMap::new(), &BTreeMap::new());
        let csv = breakdown_to_csv(&breakdown);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("category,metric,value"));
        // 7 categories x (tweet_count + 6 metrics).
        assert_eq!(csv.lines().count(), 1 + 7 * 7);
        assert!(csv.contains("Emoji,tweet_count,0"), "{csv}");
        assert!(csv.contains("NegationSarcasm,accuracy,0.000000"), "{csv}");
    }

    fn mock_gateway() -> Gateway {
        let config = BackendConfig::new("mock://nuance?seed=5", "gpt-3.5-turbo");
        Gateway::from_config(config).unwrap()
    }

    #[test]
    fn reasoning_extraction_is_deterministic_and_verbatim() {
        let gateway = mock_gateway();
        let tweet = Tweet::labeled("7", "the service was slow", SentimentLabel::Negative);
        let first = extract_reasoning(&gateway, &tweet).unwrap();
        let second = extract_reasoning(&gateway, &tweet).unwrap();
        assert!(!first.trim().is_empty());
        assert_eq!(first, second);

        let mut prediction = Prediction {
            tweet_id: tweet.id.clone(),
            strategy: crate::gateway::Strategy::Prompt,
            raw_responses: vec!["0".into()],
            voted: PredictedLabel::Negative,
            tie: false,
            reasoning: None,
        };
        attach_reasoning(&gateway, &tweet, &mut prediction).unwrap();
        assert_eq!(prediction.reasoning.as_deref(), Some(first.as_str()));
    }

    #[test]
    fn reasoning_rejects_empty_text() {
        let gateway = mock_gateway();
        let tweet = Tweet {
            id: "8".into(),
            text: "   ".into(),
            gold: None,
        };
        assert!(matches!(
            extract_reasoning(&gateway, &tweet),
            Err(NuanceError::Gateway(GatewayError::InvalidInput(_)))
        ));
    }
}
