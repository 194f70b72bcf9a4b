//! English verb inflection and subject number for hypothesis realization.
//!
//! Irregular verbs come from a bundled table; everything else follows the
//! regular `+s`, `+ed` and `+ing` spelling rules.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// (lemma, simple past, past participle)
const IRREGULAR: &[(&str, &str, &str)] = &[
    ("arise", "arose", "arisen"),
    ("awake", "awoke", "awoken"),
    ("be", "was", "been"),
    ("bear", "bore", "borne"),
    ("beat", "beat", "beaten"),
    ("become", "became", "become"),
    ("begin", "began", "begun"),
    ("bend", "bent", "bent"),
    ("bet", "bet", "bet"),
    ("bid", "bid", "bid"),
    ("bind", "bound", "bound"),
    ("bite", "bit", "bitten"),
    ("bleed", "bled", "bled"),
    ("blow", "blew", "blown"),
    ("break", "broke", "broken"),
    ("breed", "bred", "bred"),
    ("bring", "brought", "brought"),
    ("broadcast", "broadcast", "broadcast"),
    ("build", "built", "built"),
    ("burn", "burnt", "burnt"),
    ("burst", "burst", "burst"),
    ("buy", "bought", "bought"),
    ("cast", "cast", "cast"),
    ("catch", "caught", "caught"),
    ("choose", "chose", "chosen"),
    ("cling", "clung", "clung"),
    ("come", "came", "come"),
    ("cost", "cost", "cost"),
    ("creep", "crept", "crept"),
    ("cut", "cut", "cut"),
    ("deal", "dealt", "dealt"),
    ("dig", "dug", "dug"),
    ("do", "did", "done"),
    ("draw", "drew", "drawn"),
    ("dream", "dreamt", "dreamt"),
    ("drink", "drank", "drunk"),
    ("drive", "drove", "driven"),
    ("dwell", "dwelt", "dwelt"),
    ("eat", "ate", "eaten"),
    ("fall", "fell", "fallen"),
    ("feed", "fed", "fed"),
    ("feel", "felt", "felt"),
    ("fight", "fought", "fought"),
    ("find", "found", "found"),
    ("flee", "fled", "fled"),
    ("fling", "flung", "flung"),
    ("fly", "flew", "flown"),
    ("forbid", "forbade", "forbidden"),
    ("forecast", "forecast", "forecast"),
    ("foresee", "foresaw", "foreseen"),
    ("forget", "forgot", "forgotten"),
    ("forgive", "forgave", "forgiven"),
    ("freeze", "froze", "frozen"),
    ("get", "got", "gotten"),
    ("give", "gave", "given"),
    ("go", "went", "gone"),
    ("grind", "ground", "ground"),
    ("grow", "grew", "grown"),
    ("hang", "hung", "hung"),
    ("have", "had", "had"),
    ("hear", "heard", "heard"),
    ("hide", "hid", "hidden"),
    ("hit", "hit", "hit"),
    ("hold", "held", "held"),
    ("hurt", "hurt", "hurt"),
    ("keep", "kept", "kept"),
    ("kneel", "knelt", "knelt"),
    ("know", "knew", "known"),
    ("lay", "laid", "laid"),
    ("lead", "led", "led"),
    ("lean", "leant", "leant"),
    ("leap", "leapt", "leapt"),
    ("learn", "learnt", "learnt"),
    ("leave", "left", "left"),
    ("lend", "lent", "lent"),
    ("let", "let", "let"),
    ("lie", "lay", "lain"),
    ("light", "lit", "lit"),
    ("lose", "lost", "lost"),
    ("make", "made", "made"),
    ("mean", "meant", "meant"),
    ("meet", "met", "met"),
    ("mislead", "misled", "misled"),
    ("mistake", "mistook", "mistaken"),
    ("misunderstand", "misunderstood", "misunderstood"),
    ("offset", "offset", "offset"),
    ("outdo", "outdid", "outdone"),
    ("overcome", "overcame", "overcome"),
    ("overdo", "overdid", "overdone"),
    ("overhear", "overheard", "overheard"),
    ("override", "overrode", "overridden"),
    ("overrun", "overran", "overrun"),
    ("oversee", "oversaw", "overseen"),
    ("overtake", "overtook", "overtaken"),
    ("overthrow", "overthrew", "overthrown"),
    ("pay", "paid", "paid"),
    ("plead", "pled", "pled"),
    ("prove", "proved", "proven"),
    ("put", "put", "put"),
    ("quit", "quit", "quit"),
    ("read", "read", "read"),
    ("rebuild", "rebuilt", "rebuilt"),
    ("redo", "redid", "redone"),
    ("repay", "repaid", "repaid"),
    ("rethink", "rethought", "rethought"),
    ("rewrite", "rewrote", "rewritten"),
    ("rid", "rid", "rid"),
    ("ride", "rode", "ridden"),
    ("ring", "rang", "rung"),
    ("rise", "rose", "risen"),
    ("run", "ran", "run"),
    ("saw", "sawed", "sawn"),
    ("say", "said", "said"),
    ("see", "saw", "seen"),
    ("seek", "sought", "sought"),
    ("sell", "sold", "sold"),
    ("send", "sent", "sent"),
    ("set", "set", "set"),
    ("sew", "sewed", "sewn"),
    ("shake", "shook", "shaken"),
    ("shed", "shed", "shed"),
    ("shine", "shone", "shone"),
    ("shoot", "shot", "shot"),
    ("show", "showed", "shown"),
    ("shrink", "shrank", "shrunk"),
    ("shut", "shut", "shut"),
    ("sing", "sang", "sung"),
    ("sink", "sank", "sunk"),
    ("sit", "sat", "sat"),
    ("slay", "slew", "slain"),
    ("sleep", "slept", "slept"),
    ("slide", "slid", "slid"),
    ("sling", "slung", "slung"),
    ("slit", "slit", "slit"),
    ("sow", "sowed", "sown"),
    ("speak", "spoke", "spoken"),
    ("speed", "sped", "sped"),
    ("spend", "spent", "spent"),
    ("spill", "spilt", "spilt"),
    ("spin", "spun", "spun"),
    ("spit", "spat", "spat"),
    ("split", "split", "split"),
    ("spread", "spread", "spread"),
    ("spring", "sprang", "sprung"),
    ("stand", "stood", "stood"),
    ("steal", "stole", "stolen"),
    ("stick", "stuck", "stuck"),
    ("sting", "stung", "stung"),
    ("stink", "stank", "stunk"),
    ("stride", "strode", "stridden"),
    ("strike", "struck", "struck"),
    ("string", "strung", "strung"),
    ("strive", "strove", "striven"),
    ("swear", "swore", "sworn"),
    ("sweep", "swept", "swept"),
    ("swell", "swelled", "swollen"),
    ("swim", "swam", "swum"),
    ("swing", "swung", "swung"),
    ("take", "took", "taken"),
    ("teach", "taught", "taught"),
    ("tear", "tore", "torn"),
    ("tell", "told", "told"),
    ("think", "thought", "thought"),
    ("throw", "threw", "thrown"),
    ("thrust", "thrust", "thrust"),
    ("tread", "trod", "trodden"),
    ("undergo", "underwent", "undergone"),
    ("underpay", "underpaid", "underpaid"),
    ("undersell", "undersold", "undersold"),
    ("understand", "understood", "understood"),
    ("undertake", "undertook", "undertaken"),
    ("underwrite", "underwrote", "underwritten"),
    ("undo", "undid", "undone"),
    ("unwind", "unwound", "unwound"),
    ("uphold", "upheld", "upheld"),
    ("upset", "upset", "upset"),
    ("wake", "woke", "woken"),
    ("wear", "wore", "worn"),
    ("weave", "wove", "woven"),
    ("wed", "wed", "wed"),
    ("weep", "wept", "wept"),
    ("wet", "wet", "wet"),
    ("win", "won", "won"),
    ("wind", "wound", "wound"),
    ("withdraw", "withdrew", "withdrawn"),
    ("withhold", "withheld", "withheld"),
    ("withstand", "withstood", "withstood"),
    ("wring", "wrung", "wrung"),
    ("write", "wrote", "written"),
    ("bring", "brought", "brought"),
    ("outgrow", "outgrew", "outgrown"),
    ("outrun", "outran", "outrun"),
    ("outsell", "outsold", "outsold"),
    ("outshine", "outshone", "outshone"),
    ("partake", "partook", "partaken"),
    ("recast", "recast", "recast"),
    ("reset", "reset", "reset"),
    ("resell", "resold", "resold"),
    ("retake", "retook", "retaken"),
    ("retell", "retold", "retold"),
    ("spell", "spelt", "spelt"),
    ("spoil", "spoilt", "spoilt"),
    ("bust", "bust", "bust"),
    ("input", "input", "input"),
    ("output", "output", "output"),
    ("shoe", "shod", "shod"),
    ("smite", "smote", "smitten"),
    ("stave", "stove", "stove"),
    ("strew", "strewed", "strewn"),
    ("thrive", "throve", "thriven"),
    ("beget", "begot", "begotten"),
    ("behold", "beheld", "beheld"),
    ("beseech", "besought", "besought"),
    ("bestride", "bestrode", "bestridden"),
];

/// Monosyllable-looking or final-stress verbs that double their last consonant.
const DOUBLING: &[&str] = &[
    "admit", "commit", "compel", "control", "deter", "equip", "expel", "incur", "occur",
    "omit", "patrol", "permit", "prefer", "propel", "recur", "refer", "regret", "submit",
    "transfer", "confer", "defer", "infer", "rebel", "repel", "acquit", "emit", "transmit",
];

/// Verbs whose base form ends in `-ed` without being a past form.
const NOT_PAST_ED: &[&str] = &[
    "need", "proceed", "succeed", "exceed", "heed", "seed", "weed", "embed", "shred", "bed",
    "sled", "impede", "precede", "recede", "concede", "intercede",
];

struct Lexicon {
    by_lemma: HashMap<&'static str, (&'static str, &'static str)>,
    past_forms: HashSet<&'static str>,
    participles: HashSet<&'static str>,
    doubling: HashSet<&'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(|| {
        let mut by_lemma = HashMap::new();
        let mut past_forms = HashSet::new();
        let mut participles = HashSet::new();
        for &(lemma, past, pp) in IRREGULAR {
            by_lemma.insert(lemma, (past, pp));
            past_forms.insert(past);
            participles.insert(pp);
        }
        past_forms.insert("were");
        Lexicon {
            by_lemma,
            past_forms,
            participles,
            doubling: DOUBLING.iter().copied().collect(),
        }
    })
}

pub fn is_irregular(lemma: &str) -> bool {
    lexicon().by_lemma.contains_key(lemma)
}

pub fn irregular_count() -> usize {
    lexicon().by_lemma.len()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn vowel_groups(word: &str) -> usize {
    let mut groups = 0;
    let mut prev = false;
    for c in word.chars() {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

fn doubles_final_consonant(lemma: &str) -> bool {
    if lexicon().doubling.contains(lemma) {
        return true;
    }
    let chars: Vec<char> = lemma.chars().collect();
    let n = chars.len();
    if n < 3 {
        return false;
    }
    let (c1, v, c2) = (chars[n - 3], chars[n - 2], chars[n - 1]);
    !is_vowel(c1)
        && is_vowel(v)
        && !is_vowel(c2)
        && !matches!(c2, 'w' | 'x' | 'y')
        && vowel_groups(lemma) == 1
}

fn ends_consonant_y(lemma: &str) -> bool {
    let mut rev = lemma.chars().rev();
    matches!((rev.next(), rev.next()), (Some('y'), Some(c)) if !is_vowel(c))
}

/// Third person singular present.
pub fn third_person(lemma: &str) -> String {
    match lemma {
        "be" => return "is".into(),
        "have" => return "has".into(),
        _ => {}
    }
    if ends_consonant_y(lemma) {
        format!("{}ies", &lemma[..lemma.len() - 1])
    } else if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| lemma.ends_with(s)) {
        format!("{lemma}es")
    } else {
        format!("{lemma}s")
    }
}

fn regular_ed(lemma: &str) -> String {
    if lemma.ends_with('e') {
        format!("{lemma}d")
    } else if ends_consonant_y(lemma) {
        format!("{}ied", &lemma[..lemma.len() - 1])
    } else if doubles_final_consonant(lemma) {
        let last = lemma.chars().last().unwrap();
        format!("{lemma}{last}ed")
    } else {
        format!("{lemma}ed")
    }
}

pub fn past(lemma: &str) -> String {
    match lexicon().by_lemma.get(lemma) {
        Some((p, _)) => (*p).to_string(),
        None => regular_ed(lemma),
    }
}

pub fn past_participle(lemma: &str) -> String {
    match lexicon().by_lemma.get(lemma) {
        Some((_, pp)) => (*pp).to_string(),
        None => regular_ed(lemma),
    }
}

pub fn present_participle(lemma: &str) -> String {
    if let Some(stem) = lemma.strip_suffix("ie") {
        return format!("{stem}ying");
    }
    if lemma.ends_with('e') && !["ee", "ye", "oe"].iter().any(|s| lemma.ends_with(s)) && lemma != "be" {
        return format!("{}ing", &lemma[..lemma.len() - 1]);
    }
    if doubles_final_consonant(lemma) {
        let last = lemma.chars().last().unwrap();
        return format!("{lemma}{last}ing");
    }
    format!("{lemma}ing")
}

/// Whether a single verb token looks like a simple past form.
/// Forms identical to their lemma (`read`, `cut`) count as past.
pub fn is_past_form(word: &str) -> bool {
    let w = word.to_lowercase();
    let lex = lexicon();
    if lex.past_forms.contains(w.as_str()) {
        return true;
    }
    if lex.by_lemma.contains_key(w.as_str()) {
        return false;
    }
    w.len() > 3 && w.ends_with("ed") && !NOT_PAST_ED.contains(&w.as_str())
}

pub fn is_participle_form(word: &str) -> bool {
    let w = word.to_lowercase();
    lexicon().participles.contains(w.as_str()) || is_past_form(&w)
}

/// Grammatical number and person of a subject, for agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    FirstSingular,
    ThirdSingular,
    Plural,
}

const PLURAL_PRONOUNS: &[&str] = &[
    "we", "they", "you", "these", "those", "both", "many", "several", "few", "us", "them",
    "others", "all",
];
const SINGULAR_PRONOUNS: &[&str] = &[
    "he", "she", "it", "someone", "something", "somebody", "anyone", "anything", "everyone",
    "everything", "nobody", "nothing", "this", "that", "one", "him", "her", "each",
];
const IRREGULAR_PLURALS: &[&str] = &[
    "people", "children", "men", "women", "police", "feet", "teeth", "mice", "geese", "data",
    "media", "criteria", "cattle", "phenomena", "personnel", "clergy",
];
const SINGULAR_IN_S: &[&str] = &[
    "news", "series", "species", "physics", "economics", "mathematics", "politics", "means",
    "gas", "lens", "chaos", "bias", "thesis", "crisis", "analysis", "basis", "status",
    "campus", "census", "virus", "bonus", "process", "business", "success", "access",
    "address", "class", "glass", "boss", "loss", "press", "congress", "bus", "this", "is",
    "was", "has", "its", "his", "yes", "plus", "always",
];
/// Tokens that end the head-bearing prefix of a noun phrase.
const HEAD_BREAKERS: &[&str] = &[
    "of", "in", "on", "at", "for", "with", "from", "to", "that", "which", "who", "whom",
    "whose", "by", "about", "under", "over", "near", "into", "than", "like", "across",
    "during", "after", "before", "between", "against", ",", "(",
];

/// Head word of a noun phrase: the last token before the first postmodifier.
pub fn head_word(phrase: &str) -> Option<String> {
    let tokens: Vec<String> = phrase
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect();
    let cut = tokens
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, t)| HEAD_BREAKERS.contains(&t.as_str()))
        .map(|(i, _)| i)
        .unwrap_or(tokens.len());
    let mut head = tokens[..cut].iter().rev().find(|t| *t != "'s" && *t != "'")?.clone();
    if let Some(stem) = head.strip_suffix("'s") {
        head = stem.to_string();
    }
    Some(head)
}

pub fn subject_agreement(phrase: &str) -> Agreement {
    let lower: Vec<String> = phrase.split_whitespace().map(|t| t.to_lowercase()).collect();
    if lower.len() == 1 && lower[0] == "i" {
        return Agreement::FirstSingular;
    }
    let head_region = {
        let cut = lower
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, t)| HEAD_BREAKERS.contains(&t.as_str()))
            .map(|(i, _)| i)
            .unwrap_or(lower.len());
        &lower[..cut]
    };
    if head_region.iter().any(|t| t == "and") {
        return Agreement::Plural;
    }
    let Some(head) = head_word(phrase) else {
        return Agreement::ThirdSingular;
    };
    if PLURAL_PRONOUNS.contains(&head.as_str()) || IRREGULAR_PLURALS.contains(&head.as_str()) {
        return Agreement::Plural;
    }
    if SINGULAR_PRONOUNS.contains(&head.as_str()) || SINGULAR_IN_S.contains(&head.as_str()) {
        return Agreement::ThirdSingular;
    }
    let plural_suffix = head.len() > 3
        && head.ends_with('s')
        && !head.ends_with("ss")
        && !head.ends_with("us")
        && !head.ends_with("is")
        && head.chars().all(|c| c.is_alphabetic());
    if plural_suffix {
        Agreement::Plural
    } else {
        Agreement::ThirdSingular
    }
}

/// Present-tense form of `be` for a subject.
pub fn be_present(agr: Agreement) -> &'static str {
    match agr {
        Agreement::FirstSingular => "am",
        Agreement::ThirdSingular => "is",
        Agreement::Plural => "are",
    }
}

pub fn be_past(agr: Agreement) -> &'static str {
    match agr {
        Agreement::Plural => "were",
        _ => "was",
    }
}

pub fn do_present(agr: Agreement) -> &'static str {
    match agr {
        Agreement::ThirdSingular => "does",
        _ => "do",
    }
}

pub fn present(lemma: &str, agr: Agreement) -> String {
    match (lemma, agr) {
        ("be", a) => be_present(a).to_string(),
        (_, Agreement::ThirdSingular) => third_person(lemma),
        _ => lemma.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_about_two_hundred_verbs() {
        assert!(irregular_count() >= 200, "{}", irregular_count());
    }

    #[test]
    fn regular_spelling_rules() {
        assert_eq!(past("increase"), "increased");
        assert_eq!(past("acquire"), "acquired");
        assert_eq!(past("carry"), "carried");
        assert_eq!(past("play"), "played");
        assert_eq!(past("stop"), "stopped");
        assert_eq!(past("visit"), "visited");
        assert_eq!(past("prefer"), "preferred");
        assert_eq!(past("fix"), "fixed");
        assert_eq!(past("agree"), "agreed");
        assert_eq!(third_person("carry"), "carries");
        assert_eq!(third_person("go"), "goes");
        assert_eq!(third_person("watch"), "watches");
        assert_eq!(third_person("play"), "plays");
        assert_eq!(third_person("have"), "has");
        assert_eq!(present_participle("make"), "making");
        assert_eq!(present_participle("die"), "dying");
        assert_eq!(present_participle("run"), "running");
        assert_eq!(present_participle("see"), "seeing");
        assert_eq!(present_participle("be"), "being");
    }

    #[test]
    fn irregular_forms() {
        assert_eq!(past("leave"), "left");
        assert_eq!(past_participle("give"), "given");
        assert_eq!(past_participle("acquire"), "acquired");
        assert!(is_irregular("give"));
        assert!(!is_irregular("increase"));
    }

    #[test]
    fn past_form_detection() {
        assert!(is_past_form("left"));
        assert!(is_past_form("acquired"));
        assert!(is_past_form("read"));
        assert!(!is_past_form("leave"));
        assert!(!is_past_form("leaves"));
        assert!(!is_past_form("need"));
        assert!(!is_past_form("bleed"));
        assert!(is_participle_form("given"));
        assert!(!is_participle_form("give"));
    }

    #[test]
    fn agreement_heuristics() {
        assert_eq!(subject_agreement("salaries"), Agreement::Plural);
        assert_eq!(subject_agreement("the board"), Agreement::ThirdSingular);
        assert_eq!(subject_agreement("the boats of the navy"), Agreement::Plural);
        assert_eq!(subject_agreement("the day of the bombings"), Agreement::ThirdSingular);
        assert_eq!(subject_agreement("the police"), Agreement::Plural);
        assert_eq!(subject_agreement("the news"), Agreement::ThirdSingular);
        assert_eq!(subject_agreement("John and Mary"), Agreement::Plural);
        assert_eq!(subject_agreement("they"), Agreement::Plural);
        assert_eq!(subject_agreement("I"), Agreement::FirstSingular);
        assert_eq!(subject_agreement("someone"), Agreement::ThirdSingular);
        assert_eq!(subject_agreement("the company's shares"), Agreement::Plural);
        assert_eq!(subject_agreement("the bus"), Agreement::ThirdSingular);
        assert_eq!(head_word("the company 's chief").as_deref(), Some("chief"));
    }
}
