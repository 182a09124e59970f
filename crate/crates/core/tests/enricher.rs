mod common;

use std::collections::BTreeSet;

use common::{fixture, read_fixture};
use courtside::enricher::{
    audit, enrich, html_escape, link_entities, name_similarity, neighborhood, numeric_tokens,
    to_html, to_json, BackgroundTemplates, Citation, EnrichPolicy, LinkMethod, Provenance,
};
use courtside::kg::{KnowledgeGraph, RelationType};
use courtside::templater::{Draft, Mention, MentionKind, Paragraph};
use proptest::prelude::*;
use serde_json::Value;

fn kg() -> KnowledgeGraph {
    KnowledgeGraph::load(&fixture("kg.json")).unwrap()
}

/// A paragraph whose mentions are the given names, in order.
fn paragraph(parts: &[(&str, Option<MentionKind>)]) -> Paragraph {
    let mut text = String::new();
    let mut mentions = Vec::new();
    for (s, kind) in parts {
        if let Some(kind) = kind {
            mentions.push(Mention {
                surface: s.to_string(),
                start: text.len(),
                end: text.len() + s.len(),
                kind: *kind,
            });
        }
        text.push_str(s);
    }
    Paragraph {
        scope: Some("Q1".into()),
        text,
        mentions,
    }
}

fn sample_draft() -> Draft {
    use MentionKind::*;
    Draft {
        game_id: "sample".into(),
        paragraphs: vec![
            paragraph(&[
                ("Lakers", Some(Team)),
                (" beat ", None),
                ("Celtics", Some(Team)),
                (" behind ", None),
                ("LeBrom James", Some(Player)),
                (".", None),
            ]),
            paragraph(&[("Zzyzx Quonk", Some(Player)), (" watched.", None)]),
        ],
    }
}

/// Textbook edit-distance table.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn similarity_oracle(a: &str, b: &str) -> f64 {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        1.0
    } else {
        1.0 - levenshtein(&a, &b) as f64 / n as f64
    }
}

#[test]
fn linking_by_alias_similarity_and_not_at_all() {
    let report = link_entities(&sample_draft(), &kg(), 0.85);
    let got: Vec<_> = report
        .links
        .iter()
        .map(|l| (l.surface.as_str(), l.entity_id.as_str(), l.method))
        .collect();
    assert_eq!(
        got,
        [
            ("Lakers", "lal", LinkMethod::Alias),
            ("Celtics", "bos", LinkMethod::Alias),
            ("LeBrom James", "lebron-james", LinkMethod::Similarity),
        ]
    );
    let fuzzy = &report.links[2];
    assert_eq!(
        fuzzy.confidence,
        similarity_oracle("LeBrom James", "LeBron James")
    );
    assert!((fuzzy.confidence - 11.0 / 12.0).abs() < 1e-12);
    assert_eq!(report.unresolved.len(), 1);
    assert_eq!(report.unresolved[0].mention.surface, "Zzyzx Quonk");
    assert!(report.unresolved[0].best_similarity < 0.85);

    // a stricter threshold leaves the misspelling unresolved
    let strict = link_entities(&sample_draft(), &kg(), 0.95);
    assert_eq!(strict.links.len(), 2);
    assert_eq!(strict.unresolved.len(), 2);
}

#[test]
fn exact_name_links_exactly() {
    let d = Draft {
        game_id: "x".into(),
        paragraphs: vec![paragraph(&[("Joel Embiid", Some(MentionKind::Player))])],
    };
    let r = link_entities(&d, &kg(), 0.85);
    assert_eq!(r.links[0].method, LinkMethod::Exact);
    assert_eq!(r.links[0].entity_id, "joel-embiid");
    assert_eq!(r.links[0].confidence, 1.0);
}

#[test]
fn background_sentences_cite_the_graph() {
    let kg = kg();
    let draft = sample_draft();
    let links = link_entities(&draft, &kg, 0.85);
    let bg = BackgroundTemplates::bundled();
    let article = enrich(&draft, &kg, &links, &EnrichPolicy::default(), &bg).unwrap();

    let provenance: Vec<_> = article.paragraphs.iter().map(|p| p.provenance).collect();
    assert_eq!(
        provenance,
        [
            Provenance::Draft,
            Provenance::KgBackground,
            Provenance::Draft,
            Provenance::KgBackground
        ]
    );
    assert_eq!(
        article.paragraphs[1].text,
        "The two teams have met 2 times since 2018-02-08."
    );
    let h2h = &article.paragraphs[1].sentences[0];
    assert_eq!(
        h2h.slots["Count"].citation,
        Citation::HeadToHeadCount {
            team_a: "lal".into(),
            team_b: "bos".into()
        }
    );
    assert!(!h2h.supports.is_empty());

    let career = article
        .background()
        .find(|s| s.text.contains("33000"))
        .expect("leader career fact");
    assert_eq!(career.text, "LeBron James has 33000 career points.");
    assert_eq!(
        career.slots["Value"].citation,
        Citation::Attribute {
            entity: "lebron-james".into(),
            attribute: "career_points".into()
        }
    );
    assert_eq!(career.entities[0].entity_id, "lebron-james");
    assert_eq!(
        &career.text[career.entities[0].start..career.entities[0].end],
        "LeBron James"
    );

    // draft text survives untouched
    assert_eq!(article.draft_text(), draft.text());
    assert!(audit(&article, &kg, &bg).is_empty());
}

#[test]
fn payload_is_the_one_hop_neighbourhood() {
    let kg = kg();
    let doc: Value = serde_json::from_str(&read_fixture("kg.json")).unwrap();
    let all: BTreeSet<RelationType> = RelationType::ALL.iter().copied().collect();
    for id in ["lebron-james", "joel-embiid", "lal"] {
        let mut neighbours = BTreeSet::new();
        let mut edges = 0;
        for t in doc["triples"].as_array().unwrap() {
            let (h, tl) = (t["head"].as_str().unwrap(), t["tail"].as_str().unwrap());
            if h == id || tl == id {
                edges += 1;
                neighbours.insert(if h == id { tl } else { h });
            }
        }
        let p = neighborhood(&kg, id, &all).unwrap();
        assert_eq!(p.nodes[0].id, id);
        assert_eq!(p.nodes.len(), neighbours.len() + 1, "{id}");
        assert_eq!(p.edges.len(), edges, "{id}");
        let ids: BTreeSet<&str> = p.nodes[1..].iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, neighbours);
    }
    assert!(neighborhood(&kg, "nobody", &all).is_none());
}

#[test]
fn export_is_deterministic_and_annotated() {
    let kg = kg();
    let draft = sample_draft();
    let bg = BackgroundTemplates::bundled();
    let make = || {
        let links = link_entities(&draft, &kg, 0.85);
        enrich(&draft, &kg, &links, &EnrichPolicy::default(), &bg).unwrap()
    };
    let (a, b) = (make(), make());
    assert_eq!(to_json(&a), to_json(&b));
    assert_eq!(to_html(&a), to_html(&b));
    let html = to_html(&a);
    for l in &a.links {
        assert!(html.contains(&format!("data-entity-id=\"{}\"", l.entity_id)));
    }
    assert!(!html.contains("Zzyzx Quonk</span>"));
    let back: courtside::enricher::Article = serde_json::from_str(&to_json(&a)).unwrap();
    assert_eq!(back, a);
    assert_eq!(
        html_escape("<a href='x'>&\"</a>"),
        "&lt;a href=&#39;x&#39;&gt;&amp;&quot;&lt;/a&gt;"
    );
}

#[test]
fn no_links_means_no_background() {
    let kg = kg();
    let draft = Draft {
        game_id: "x".into(),
        paragraphs: vec![paragraph(&[("Nothing to link here.", None)])],
    };
    let links = link_entities(&draft, &kg, 0.85);
    let a = enrich(
        &draft,
        &kg,
        &links,
        &EnrichPolicy::default(),
        &BackgroundTemplates::bundled(),
    )
    .unwrap();
    assert_eq!(a.paragraphs.len(), 1);
    assert_eq!(a.background().count(), 0);
    assert!(a.payloads.is_empty());
}

#[test]
fn audit_catches_tampering() {
    let kg = kg();
    let draft = sample_draft();
    let bg = BackgroundTemplates::bundled();
    let links = link_entities(&draft, &kg, 0.85);
    let clean = enrich(&draft, &kg, &links, &EnrichPolicy::default(), &bg).unwrap();

    let mut wrong_value = clean.clone();
    let s = &mut wrong_value.paragraphs[1].sentences[0];
    s.slots.get_mut("Count").unwrap().value = "7".into();
    s.text = s.text.replace(" 2 ", " 7 ");
    wrong_value.paragraphs[1].text = s.text.clone();
    assert!(!audit(&wrong_value, &kg, &bg).is_empty());

    let mut extra_number = clean.clone();
    let p = &mut extra_number.paragraphs[1];
    p.sentences[0].text.push_str(" Attendance was 19000.");
    p.text = p.sentences[0].text.clone();
    let findings = audit(&extra_number, &kg, &bg);
    assert!(
        findings.iter().any(|f| f.problem.contains("19000")),
        "{findings:?}"
    );
}

#[test]
fn numbers_are_found() {
    assert_eq!(
        numeric_tokens("met 2 times since 2018-02-08, 1,200.5 fans"),
        ["2", "2018", "02", "08", "1,200.5"]
    );
}

#[test]
fn unknown_relation_in_policy_is_rejected() {
    let policy = EnrichPolicy {
        neighborhood_relations: vec!["COACHED_BY".into()],
        ..EnrichPolicy::default()
    };
    assert!(policy.relations().is_err());
    let draft = sample_draft();
    let links = link_entities(&draft, &kg(), 0.85);
    assert!(enrich(
        &draft,
        &kg(),
        &links,
        &policy,
        &BackgroundTemplates::bundled()
    )
    .is_err());
}

proptest! {
    #[test]
    fn similarity_matches_the_table(a in "[a-zA-Z ]{0,14}", b in "[a-zA-Z ]{0,14}") {
        let s = name_similarity(&a, &b);
        prop_assert!((s - similarity_oracle(&a, &b)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, name_similarity(&b, &a));
    }
}
