//! Dev tool: deterministically reconstruct the canonical roster data file.
//!
//! Run with `cargo test -p netweave-core --test regen_canonical -- --ignored`
//! and commit the resulting `data/canonical_roster.json`. The construction
//! fixes the published composition (politics 26/24, religion 19/20
//! Protestant/Unreligious) by exact quota, places interest overlaps so the
//! interests pair baseline lands on its published scale, and invents every
//! remaining field from the curated marginals. The checked-in file is the
//! source of truth; this test exists so it can be rebuilt byte-identically.

use std::collections::BTreeSet;

use netweave_core::homophily::baseline_pairs;
use netweave_core::persona::{Attribute, Persona, Provenance, Roster};
use netweave_core::seed::rng_for;
use rand::Rng;

const ROSTER_SEED: u64 = 20240501;

/// Distinct filler interests, disjoint from the shared hub tags below.
const UNIQUE_TAGS: [&str; 120] = [
    "analog photography", "antique maps", "aquascaping", "astrophotography", "badminton",
    "banjo", "baton twirling", "beach volleyball", "bicycle repair", "birdhouse building",
    "blacksmithing", "bobsled history", "bonsai", "book binding", "botanical illustration",
    "breadmaking", "bridge", "butterfly gardening", "cake decorating", "candle making",
    "canoeing", "cartography", "cheese making", "chess puzzles", "choir",
    "cider pressing", "cliff diving", "clock repair", "cloud spotting", "coin collecting",
    "cold plunges", "community theater", "competitive eating", "cribbage", "crochet",
    "cross-country skiing", "curling", "darts", "digital art", "dog agility",
    "dollhouse miniatures", "drone racing", "dumpling making", "embroidery", "escape rooms",
    "falconry", "fencing", "fermentation", "field hockey", "film photography",
    "fire spinning", "flower arranging", "fly fishing", "foraging", "fossil hunting",
    "fountain pens", "game design", "geocaching", "ghost stories", "glassblowing",
    "go", "gospel choir", "graffiti art", "hammock camping", "handbell ringing",
    "herb gardening", "home automation", "homemade pasta", "hot air balloons", "ice fishing",
    "ice sculpting", "improv comedy", "kendo", "kite flying", "lacrosse",
    "landscape painting", "lapidary", "latte art", "leathercraft", "lighthouse spotting",
    "lock picking", "macrame", "magic tricks", "mahjong", "marathon training",
    "metal detecting", "meteorology", "miniature painting", "model rockets", "mosaics",
    "mountain biking", "mushroom cultivation", "needlepoint", "orienteering", "origami",
    "paddleboarding", "paper marbling", "parkour", "pinball", "pottery wheel",
    "puppetry", "quilling", "radio restoration", "roller derby", "rock tumbling",
    "rug hooking", "salsa dancing", "sandcastle building", "scrapbooking", "slacklining",
    "snowshoeing", "soap making", "speedcubing", "spelunking", "stained glass",
    "storm chasing", "string quartets", "tai chi", "terrarium building", "ultimate frisbee",
];

/// Hub tags: each is shared by one disjoint persona group, sized so the
/// ordered-pair overlap count lands at 118 of 2450.
const SHARED_GROUPS: [(&str, usize); 11] = [
    ("hiking", 5),
    ("board games", 5),
    ("cooking", 5),
    ("live music", 4),
    ("running", 4),
    ("gardening", 4),
    ("video games", 3),
    ("travel", 3),
    ("photography", 3),
    ("yoga", 2),
    ("fishing", 2),
];

fn quota<const N: usize>(spec: [(&str, usize); N]) -> Vec<String> {
    let mut out = Vec::new();
    for (value, count) in spec {
        out.extend(std::iter::repeat_n(value.to_string(), count));
    }
    out
}

fn shuffled<T>(mut items: Vec<T>, rng: &mut impl Rng) -> Vec<T> {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
    items
}

fn build_roster() -> Roster {
    let n = 50;
    let mut rng = rng_for(ROSTER_SEED, &["canonical-roster"]);

    let names: Vec<&str> = shuffled(Roster::name_pool(), &mut rng)
        .into_iter()
        .take(n)
        .collect();
    let politics = shuffled(quota([("Republican", 26), ("Democrat", 24)]), &mut rng);
    let religion = shuffled(
        quota([
            ("Protestant", 19),
            ("Unreligious", 20),
            ("Catholic", 6),
            ("Hindu", 2),
            ("Jewish", 1),
            ("Muslim", 1),
            ("Buddhist", 1),
        ]),
        &mut rng,
    );
    let race = shuffled(
        quota([
            ("White", 30),
            ("Hispanic", 8),
            ("Black", 7),
            ("Asian", 3),
            ("Other", 2),
        ]),
        &mut rng,
    );
    let gender = shuffled(quota([("female", 26), ("male", 24)]), &mut rng);
    let brackets = shuffled(
        quota([("18-29", 11), ("30-44", 13), ("45-64", 16), ("65+", 10)]),
        &mut rng,
    );
    let ages: Vec<u32> = brackets
        .iter()
        .map(|label| match label.as_str() {
            "18-29" => rng.gen_range(18..=29),
            "30-44" => rng.gen_range(30..=44),
            "45-64" => rng.gen_range(45..=64),
            _ => rng.gen_range(65..=92),
        })
        .collect();

    // Disjoint hub-tag groups over a shuffled id ordering; everyone ends
    // up with exactly three interests.
    let order: Vec<usize> = shuffled((0..n).collect(), &mut rng);
    let mut interests: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    let mut cursor = 0;
    for (tag, size) in SHARED_GROUPS {
        for &id in &order[cursor..cursor + size] {
            interests[id].insert(tag.to_string());
        }
        cursor += size;
    }
    let mut unique_iter = UNIQUE_TAGS.iter();
    for set in interests.iter_mut() {
        while set.len() < 3 {
            set.insert(
                unique_iter
                    .next()
                    .expect("enough unique filler tags")
                    .to_string(),
            );
        }
    }

    let personas: Vec<Persona> = (0..n)
        .map(|id| Persona {
            id,
            name: names[id].to_string(),
            gender: gender[id].clone(),
            age: ages[id],
            race: race[id].clone(),
            religion: religion[id].clone(),
            politics: politics[id].clone(),
            interests: interests[id].clone(),
        })
        .collect();

    Roster::new(
        Provenance {
            source: "canonical-us-marginals-v1".to_string(),
            seed: Some(ROSTER_SEED),
            note: Some(
                "curated composition: politics 26/24 and religion 19 Protestant / 20 Unreligious \
                 match the published counts; every other field is invented from the curated \
                 marginals and an interest-overlap layout targeting the published pair baseline"
                    .to_string(),
            ),
        },
        personas,
    )
    .expect("constructed roster is valid")
}

#[test]
#[ignore = "dev tool: rewrites data/canonical_roster.json"]
fn regenerate_canonical_roster() {
    let roster = build_roster();

    let politics = netweave_core::persona::partition(&roster, Attribute::Politics).unwrap();
    assert_eq!(politics.groups["Republican"].len(), 26);
    assert_eq!(politics.groups["Democrat"].len(), 24);
    let religion = netweave_core::persona::partition(&roster, Attribute::Religion).unwrap();
    assert_eq!(religion.groups["Protestant"].len(), 19);
    assert_eq!(religion.groups["Unreligious"].len(), 20);
    let interests = baseline_pairs(&roster, Attribute::Interests);
    assert_eq!(interests.matching, 118, "hub groups must stay disjoint");
    let p = interests.fraction();
    assert!((p - 0.046).abs() <= 0.004, "interests baseline {p}");

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/canonical_roster.json");
    let mut text = serde_json::to_string_pretty(&roster).unwrap();
    text.push('\n');
    std::fs::write(path, text).unwrap();
    eprintln!("wrote {path}");
}
