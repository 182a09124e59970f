//! Entity linking, knowledge-graph background sentences and article export.
//!
//! Draft paragraphs are copied into the article untouched. Background
//! paragraphs are rendered from a dedicated template set, and every slot value
//! in them carries a citation that [`audit`] can re-check against the graph.
//!
//! HTML export wraps each linked mention as
//! `<span class="kg-entity" data-entity-id=".." data-entity-class=".."
//! data-link-method="..">`, marks background paragraphs with
//! `class="kg-background"`, and embeds the per-entity payloads in
//! `<script type="application/json" id="kg-payload">`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{AttrValue, EntityClass, KgError, KnowledgeGraph, RelationType};
use crate::templater::{
    render_with_mentions, Binding, Bindings, Draft, Mention, MentionKind, Template, TemplateError,
};

pub const BUNDLED_BACKGROUND: &str = include_str!("../data/background.toml");

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("policy references unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("no background template for `{0}`")]
    MissingBackground(String),
    #[error("background templates: {0}")]
    Parse(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Kg(#[from] KgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMethod {
    Exact,
    Alias,
    Similarity,
}

impl LinkMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkMethod::Exact => "exact",
            LinkMethod::Alias => "alias",
            LinkMethod::Similarity => "similarity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    pub paragraph: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity_id: String,
    pub entity_class: EntityClass,
    pub confidence: f64,
    pub method: LinkMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedMention {
    pub paragraph: usize,
    pub mention: Mention,
    /// Best similarity seen, below the threshold.
    pub best_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkReport {
    pub links: Vec<EntityLink>,
    pub unresolved: Vec<UnresolvedMention>,
}

/// `1 - levenshtein / max_len` over lowercased characters.
pub fn name_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    let len = a.chars().count().max(b.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(&a, &b) as f64 / len as f64
}

fn class_of(kind: MentionKind) -> EntityClass {
    match kind {
        MentionKind::Player => EntityClass::Player,
        MentionKind::Team => EntityClass::Team,
    }
}

enum Resolution {
    Linked(String, LinkMethod, f64),
    Unresolved(f64),
}

fn resolve_mention(
    kg: &KnowledgeGraph,
    class: EntityClass,
    surface: &str,
    threshold: f64,
) -> Resolution {
    if let Some(e) = kg.entity(surface).filter(|e| e.class == class) {
        return Resolution::Linked(e.id.clone(), LinkMethod::Exact, 1.0);
    }
    if let Some(e) = kg.entities_of(class).find(|e| e.name() == surface) {
        return Resolution::Linked(e.id.clone(), LinkMethod::Exact, 1.0);
    }
    if let Some(e) = kg.find_by_alias(class, surface) {
        return Resolution::Linked(e.id.clone(), LinkMethod::Alias, 1.0);
    }
    // entities_of iterates in id order, so the first best wins ties by id
    let mut best: Option<(&str, f64)> = None;
    for e in kg.entities_of(class) {
        let s = name_similarity(surface, e.name());
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((&e.id, s));
        }
    }
    match best {
        Some((id, s)) if s >= threshold => {
            Resolution::Linked(id.to_owned(), LinkMethod::Similarity, s)
        }
        Some((_, s)) => Resolution::Unresolved(s),
        None => Resolution::Unresolved(0.0),
    }
}

/// Resolves every recorded mention independently; results are ordered by
/// paragraph and offset.
pub fn link_entities(draft: &Draft, kg: &KnowledgeGraph, threshold: f64) -> LinkReport {
    let mut report = LinkReport::default();
    for (pi, p) in draft.paragraphs.iter().enumerate() {
        for m in &p.mentions {
            let class = class_of(m.kind);
            match resolve_mention(kg, class, &m.surface, threshold) {
                Resolution::Linked(entity_id, method, confidence) => {
                    report.links.push(EntityLink {
                        paragraph: pi,
                        start: m.start,
                        end: m.end,
                        surface: m.surface.clone(),
                        entity_id,
                        entity_class: class,
                        confidence,
                        method,
                    })
                }
                Resolution::Unresolved(best_similarity) => {
                    report.unresolved.push(UnresolvedMention {
                        paragraph: pi,
                        mention: m.clone(),
                        best_similarity,
                    })
                }
            }
        }
    }
    report.links.sort_by_key(|l| (l.paragraph, l.start, l.end));
    report
        .unresolved
        .sort_by_key(|u| (u.paragraph, u.mention.start, u.mention.end));
    report
}

/// Where a background slot value comes from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Citation {
    Attribute {
        entity: String,
        attribute: String,
    },
    Triple {
        id: String,
    },
    /// Number of games between two teams.
    HeadToHeadCount {
        team_a: String,
        team_b: String,
    },
}

impl Citation {
    pub fn label(&self) -> String {
        match self {
            Citation::Attribute { entity, attribute } => format!("{entity}#{attribute}"),
            Citation::Triple { id } => id.clone(),
            Citation::HeadToHeadCount { team_a, team_b } => {
                format!("head_to_head({team_a},{team_b})")
            }
        }
    }

    /// The value this citation stands for, read back from the graph.
    pub fn lookup(&self, kg: &KnowledgeGraph) -> Option<String> {
        match self {
            Citation::Attribute { entity, attribute } => {
                kg.entity(entity)?.attr(attribute).map(AttrValue::to_string)
            }
            Citation::Triple { id } => kg.triples().find(|t| t.id() == *id).map(|t| t.id()),
            Citation::HeadToHeadCount { team_a, team_b } => kg
                .head_to_head(team_a, team_b)
                .ok()
                .map(|g| g.len().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitedValue {
    pub value: String,
    pub citation: Citation,
}

/// An entity name inside a background sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackgroundEntity {
    pub start: usize,
    pub end: usize,
    pub entity_id: String,
    pub entity_class: EntityClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackgroundSentence {
    pub template_id: String,
    pub text: String,
    pub slots: BTreeMap<String, CitedValue>,
    /// Triples backing the sentence beyond its slot values.
    pub supports: Vec<Citation>,
    pub entities: Vec<BackgroundEntity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Draft,
    KgBackground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleParagraph {
    pub provenance: Provenance,
    pub text: String,
    /// Empty for draft paragraphs.
    pub sentences: Vec<BackgroundSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadNode {
    pub id: String,
    pub class: EntityClass,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub relation: RelationType,
}

/// An entity with its attributes and one-hop neighbourhood, shaped for a
/// force-directed layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPayload {
    pub id: String,
    pub class: EntityClass,
    pub attributes: BTreeMap<String, AttrValue>,
    pub nodes: Vec<PayloadNode>,
    pub edges: Vec<PayloadEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub game_id: String,
    pub title: String,
    pub paragraphs: Vec<ArticleParagraph>,
    /// Draft mention links, with `paragraph` indexing `paragraphs`.
    pub links: Vec<EntityLink>,
    pub unresolved: Vec<UnresolvedMention>,
    pub payloads: BTreeMap<String, EntityPayload>,
}

impl Article {
    /// Draft paragraphs joined as [`Draft::text`] joins them.
    pub fn draft_text(&self) -> String {
        self.paragraphs
            .iter()
            .filter(|p| p.provenance == Provenance::Draft && !p.text.is_empty())
            .map(|p| p.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn background(&self) -> impl Iterator<Item = &BackgroundSentence> {
        self.paragraphs.iter().flat_map(|p| p.sentences.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichPolicy {
    pub similarity_threshold: f64,
    /// Add a head-to-head sentence after the first paragraph.
    pub head_to_head: bool,
    /// Add one career fact per team leader at the end.
    pub career_facts: bool,
    /// Attributes tried in order for a leader's career fact.
    pub career_attributes: Vec<String>,
    /// Relations followed for payload neighbourhoods.
    pub neighborhood_relations: Vec<String>,
}

impl Default for EnrichPolicy {
    fn default() -> Self {
        EnrichPolicy {
            similarity_threshold: 0.85,
            head_to_head: true,
            career_facts: true,
            career_attributes: vec![
                "career_points".into(),
                "career_rebounds".into(),
                "career_assists".into(),
            ],
            neighborhood_relations: RelationType::ALL
                .iter()
                .map(|r| r.as_str().to_owned())
                .collect(),
        }
    }
}

impl EnrichPolicy {
    pub fn relations(&self) -> Result<BTreeSet<RelationType>, EnrichError> {
        self.neighborhood_relations
            .iter()
            .map(|r| {
                r.parse()
                    .map_err(|_| EnrichError::UnknownRelation(r.clone()))
            })
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundEntry {
    id: String,
    key: String,
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundFile {
    background: Vec<BackgroundEntry>,
}

/// Background templates keyed by `HEAD_TO_HEAD`, `HEAD_TO_HEAD_ONCE`, or the
/// attribute name a career fact reads.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundTemplates {
    pub templates: BTreeMap<String, Template>,
}

impl BackgroundTemplates {
    pub fn bundled() -> BackgroundTemplates {
        BackgroundTemplates::from_toml(BUNDLED_BACKGROUND)
            .expect("bundled background templates are valid")
    }

    pub fn from_toml(text: &str) -> Result<BackgroundTemplates, EnrichError> {
        let file: BackgroundFile =
            toml::from_str(text).map_err(|e| EnrichError::Parse(e.to_string()))?;
        let mut templates = BTreeMap::new();
        for e in file.background {
            templates.insert(e.key.clone(), Template::new(&e.id, &e.key, &e.text)?);
        }
        Ok(BackgroundTemplates { templates })
    }

    fn get(&self, key: &str) -> Result<&Template, EnrichError> {
        self.templates
            .get(key)
            .ok_or_else(|| EnrichError::MissingBackground(key.to_owned()))
    }
}

struct Slot {
    cited: CitedValue,
    entity: Option<(String, EntityClass)>,
}

fn attr_slot(kg: &KnowledgeGraph, entity: &str, attribute: &str) -> Option<Slot> {
    let e = kg.entity(entity)?;
    let value = e.attr(attribute)?.to_string();
    Some(Slot {
        cited: CitedValue {
            value,
            citation: Citation::Attribute {
                entity: entity.to_owned(),
                attribute: attribute.to_owned(),
            },
        },
        entity: (attribute == "name").then(|| (e.id.clone(), e.class)),
    })
}

fn build_sentence(
    template: &Template,
    slots: BTreeMap<String, Slot>,
    supports: Vec<Citation>,
) -> Result<BackgroundSentence, EnrichError> {
    let bindings: Bindings = slots
        .iter()
        .map(|(k, s)| {
            let kind = s.entity.as_ref().map(|(_, c)| match c {
                EntityClass::Team => MentionKind::Team,
                _ => MentionKind::Player,
            });
            (
                k.clone(),
                Binding {
                    value: s.cited.value.clone(),
                    kind,
                },
            )
        })
        .collect();
    let (text, mentions) = render_with_mentions(template, &bindings)?;
    // mentions come out in marker order; pair them with their slots the same way
    let mut entities = Vec::new();
    let mut named = template_slot_order(template)
        .into_iter()
        .filter_map(|name| slots[&name].entity.clone());
    for m in mentions {
        if let Some((entity_id, entity_class)) = named.next() {
            entities.push(BackgroundEntity {
                start: m.start,
                end: m.end,
                entity_id,
                entity_class,
            });
        }
    }
    Ok(BackgroundSentence {
        template_id: template.id.clone(),
        text,
        slots: slots.into_iter().map(|(k, s)| (k, s.cited)).collect(),
        supports,
        entities,
    })
}

fn template_slot_order(t: &Template) -> Vec<String> {
    t.text
        .match_indices("[#")
        .map(|(i, _)| {
            let rest = &t.text[i + 2..];
            rest[..rest.find(']').unwrap_or(rest.len())].to_owned()
        })
        .collect()
}

fn head_to_head_sentence(
    kg: &KnowledgeGraph,
    templates: &BackgroundTemplates,
    a: &str,
    b: &str,
) -> Result<Option<BackgroundSentence>, EnrichError> {
    let games = kg.head_to_head(a, b)?;
    let Some(first) = games.first() else {
        return Ok(None);
    };
    let Some(date) = attr_slot(kg, &first.id, "date") else {
        return Ok(None);
    };
    let mut slots = BTreeMap::new();
    slots.insert("Date".to_owned(), date);
    let key = if games.len() == 1 {
        "HEAD_TO_HEAD_ONCE"
    } else {
        slots.insert(
            "Count".to_owned(),
            Slot {
                cited: CitedValue {
                    value: games.len().to_string(),
                    citation: Citation::HeadToHeadCount {
                        team_a: a.to_owned(),
                        team_b: b.to_owned(),
                    },
                },
                entity: None,
            },
        );
        "HEAD_TO_HEAD"
    };
    let game_ids: BTreeSet<&str> = games.iter().map(|g| g.id.as_str()).collect();
    let supports = kg
        .triples()
        .filter(|t| {
            t.relation == RelationType::ParticipatedIn
                && game_ids.contains(t.tail.as_str())
                && (t.head == a || t.head == b)
        })
        .map(|t| Citation::Triple { id: t.id() })
        .collect();
    build_sentence(templates.get(key)?, slots, supports).map(Some)
}

fn career_sentence(
    kg: &KnowledgeGraph,
    templates: &BackgroundTemplates,
    policy: &EnrichPolicy,
    player: &str,
) -> Result<Option<BackgroundSentence>, EnrichError> {
    for attribute in &policy.career_attributes {
        let Some(value) = attr_slot(kg, player, attribute) else {
            continue;
        };
        let Some(name) = attr_slot(kg, player, "name") else {
            return Ok(None);
        };
        let mut slots = BTreeMap::new();
        slots.insert("Player".to_owned(), name);
        slots.insert("Value".to_owned(), value);
        return build_sentence(templates.get(attribute)?, slots, Vec::new()).map(Some);
    }
    Ok(None)
}

fn background_paragraph(sentences: Vec<BackgroundSentence>) -> ArticleParagraph {
    let mut text = String::new();
    let mut out = Vec::with_capacity(sentences.len());
    for mut s in sentences {
        if !text.is_empty() {
            text.push(' ');
        }
        let off = text.len();
        text.push_str(&s.text);
        for e in &mut s.entities {
            e.start += off;
            e.end += off;
        }
        out.push(s);
    }
    ArticleParagraph {
        provenance: Provenance::KgBackground,
        text,
        sentences: out,
    }
}

/// One-hop neighbourhood of `id` over `relations`, self first, then
/// neighbours in id order.
pub fn neighborhood(
    kg: &KnowledgeGraph,
    id: &str,
    relations: &BTreeSet<RelationType>,
) -> Option<EntityPayload> {
    let e = kg.entity(id)?;
    let mut edges: Vec<PayloadEdge> = kg
        .incident(id)
        .into_iter()
        .filter(|t| relations.contains(&t.relation))
        .map(|t| PayloadEdge {
            id: t.id(),
            source: t.head.clone(),
            target: t.tail.clone(),
            relation: t.relation,
        })
        .collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    let neighbours: BTreeSet<&str> = edges
        .iter()
        .map(|t| {
            if t.source == id {
                t.target.as_str()
            } else {
                t.source.as_str()
            }
        })
        .filter(|n| *n != id)
        .collect();
    let node = |x: &crate::kg::Entity| PayloadNode {
        id: x.id.clone(),
        class: x.class,
        name: x.name().to_owned(),
    };
    let mut nodes = vec![node(e)];
    nodes.extend(
        neighbours
            .into_iter()
            .filter_map(|n| kg.entity(n))
            .map(node),
    );
    Some(EntityPayload {
        id: e.id.clone(),
        class: e.class,
        attributes: e.attributes.clone(),
        nodes,
        edges,
    })
}

/// Builds the article: draft paragraphs verbatim, a head-to-head paragraph
/// after the first one, and leader career facts at the end.
pub fn enrich(
    draft: &Draft,
    kg: &KnowledgeGraph,
    links: &LinkReport,
    policy: &EnrichPolicy,
    templates: &BackgroundTemplates,
) -> Result<Article, EnrichError> {
    let relations = policy.relations()?;
    let mut teams: Vec<&str> = Vec::new();
    for l in links
        .links
        .iter()
        .filter(|l| l.entity_class == EntityClass::Team)
    {
        if !teams.contains(&l.entity_id.as_str()) {
            teams.push(&l.entity_id);
        }
    }

    let mut h2h = Vec::new();
    if policy.head_to_head && teams.len() >= 2 {
        h2h.extend(head_to_head_sentence(kg, templates, teams[0], teams[1])?);
    }
    let mut career = Vec::new();
    if policy.career_facts {
        let mut seen = BTreeSet::new();
        for team in &teams {
            for leader in kg.leaders(team)?.0 {
                if seen.insert(leader.id.clone()) {
                    career.extend(career_sentence(kg, templates, policy, &leader.id)?);
                }
            }
        }
    }

    let mut paragraphs = Vec::new();
    let mut index_of_draft = Vec::with_capacity(draft.paragraphs.len());
    for (i, p) in draft.paragraphs.iter().enumerate() {
        index_of_draft.push(paragraphs.len());
        paragraphs.push(ArticleParagraph {
            provenance: Provenance::Draft,
            text: p.text.clone(),
            sentences: Vec::new(),
        });
        if i == 0 && !h2h.is_empty() {
            paragraphs.push(background_paragraph(std::mem::take(&mut h2h)));
        }
    }
    if !h2h.is_empty() {
        paragraphs.push(background_paragraph(h2h));
    }
    if !career.is_empty() {
        paragraphs.push(background_paragraph(career));
    }

    let remap = |p: usize| index_of_draft.get(p).copied().unwrap_or(p);
    let article_links: Vec<EntityLink> = links
        .links
        .iter()
        .map(|l| EntityLink {
            paragraph: remap(l.paragraph),
            ..l.clone()
        })
        .collect();
    let unresolved = links
        .unresolved
        .iter()
        .map(|u| UnresolvedMention {
            paragraph: remap(u.paragraph),
            ..u.clone()
        })
        .collect();

    let mut payloads = BTreeMap::new();
    let entity_ids = article_links.iter().map(|l| l.entity_id.as_str()).chain(
        paragraphs
            .iter()
            .flat_map(|p| p.sentences.iter())
            .flat_map(|s| s.entities.iter())
            .map(|e| e.entity_id.as_str()),
    );
    for id in entity_ids {
        if !payloads.contains_key(id) {
            if let Some(p) = neighborhood(kg, id, &relations) {
                payloads.insert(id.to_owned(), p);
            }
        }
    }

    let title = match teams.as_slice() {
        [a, b, ..] => format!(
            "{} vs {}",
            kg.entity(a).map_or(*a, |e| e.name()),
            kg.entity(b).map_or(*b, |e| e.name())
        ),
        _ => draft.game_id.clone(),
    };
    Ok(Article {
        game_id: draft.game_id.clone(),
        title,
        paragraphs,
        links: article_links,
        unresolved,
        payloads,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub paragraph: usize,
    pub sentence: usize,
    pub problem: String,
}

/// Re-derives every background slot from the graph and re-renders each
/// sentence from its template, so nothing outside the template text and the
/// cited values can appear. An empty result means the article is clean.
pub fn audit(
    article: &Article,
    kg: &KnowledgeGraph,
    templates: &BackgroundTemplates,
) -> Vec<AuditFinding> {
    let mut findings = Vec::new();
    let by_id: BTreeMap<&str, &Template> = templates
        .templates
        .values()
        .map(|t| (t.id.as_str(), t))
        .collect();
    for (pi, p) in article.paragraphs.iter().enumerate() {
        if p.provenance == Provenance::Draft {
            if !p.sentences.is_empty() {
                findings.push(AuditFinding {
                    paragraph: pi,
                    sentence: 0,
                    problem: "draft paragraph carries background sentences".into(),
                });
            }
            continue;
        }
        let mut report = |si: usize, problem: String| {
            findings.push(AuditFinding {
                paragraph: pi,
                sentence: si,
                problem,
            })
        };
        let joined: Vec<&str> = p.sentences.iter().map(|s| s.text.as_str()).collect();
        if joined.join(" ") != p.text {
            report(0, "paragraph text differs from its sentences".into());
        }
        for (si, s) in p.sentences.iter().enumerate() {
            if s.slots.is_empty() && s.supports.is_empty() {
                report(si, "sentence cites nothing".into());
            }
            for (name, cv) in &s.slots {
                match cv.citation.lookup(kg) {
                    Some(v) if v == cv.value => {}
                    Some(v) => report(
                        si,
                        format!("slot {name} = {:?} but graph has {v:?}", cv.value),
                    ),
                    None => report(
                        si,
                        format!("slot {name} cites missing {}", cv.citation.label()),
                    ),
                }
            }
            for c in &s.supports {
                if c.lookup(kg).is_none() {
                    report(si, format!("support {} not in graph", c.label()));
                }
            }
            let cited: Vec<String> = s
                .slots
                .values()
                .filter_map(|c| c.citation.lookup(kg))
                .collect();
            for tok in numeric_tokens(&s.text) {
                if !cited.iter().any(|v| v.contains(tok)) {
                    report(si, format!("number {tok} is not among the cited values"));
                }
            }
            let Some(t) = by_id.get(s.template_id.as_str()) else {
                report(si, format!("unknown template {}", s.template_id));
                continue;
            };
            let bindings: Bindings = s
                .slots
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        Binding {
                            value: v.value.clone(),
                            kind: None,
                        },
                    )
                })
                .collect();
            match render_with_mentions(t, &bindings) {
                Ok((text, _)) if text == s.text => {}
                Ok(_) => report(
                    si,
                    "text is not the template filled with its cited values".into(),
                ),
                Err(e) => report(si, e.to_string()),
            }
        }
    }
    findings
}

/// Digit runs, allowing inner `.` or `,` separators.
pub fn numeric_tokens(text: &str) -> Vec<&str> {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"\d+(?:[.,]\d+)*").expect("valid regex"))
        .find_iter(text)
        .map(|m| m.as_str())
        .collect()
}

pub fn to_json(article: &Article) -> String {
    let mut s = serde_json::to_string_pretty(article).expect("article serializes");
    s.push('\n');
    s
}

pub fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

struct Span<'a> {
    start: usize,
    end: usize,
    id: &'a str,
    class: EntityClass,
    method: &'a str,
}

fn annotate(text: &str, mut spans: Vec<Span<'_>>) -> String {
    spans.sort_by_key(|s| (s.start, s.end));
    let mut out = String::new();
    let mut pos = 0;
    for s in spans {
        // overlapping or out-of-range spans are left as plain text
        if s.start < pos
            || s.end > text.len()
            || !text.is_char_boundary(s.start)
            || !text.is_char_boundary(s.end)
        {
            continue;
        }
        out.push_str(&html_escape(&text[pos..s.start]));
        let _ = write!(
            out,
            "<span class=\"kg-entity\" data-entity-id=\"{}\" data-entity-class=\"{}\" data-link-method=\"{}\">{}</span>",
            html_escape(s.id),
            s.class,
            s.method,
            html_escape(&text[s.start..s.end])
        );
        pos = s.end;
    }
    out.push_str(&html_escape(&text[pos..]));
    out
}

pub fn to_html(article: &Article) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", html_escape(&article.title));
    out.push_str("</head>\n<body>\n");
    let _ = writeln!(
        out,
        "<article data-game-id=\"{}\">",
        html_escape(&article.game_id)
    );
    let _ = writeln!(out, "<h1>{}</h1>", html_escape(&article.title));
    for (pi, p) in article.paragraphs.iter().enumerate() {
        match p.provenance {
            Provenance::Draft => {
                let spans = article
                    .links
                    .iter()
                    .filter(|l| l.paragraph == pi)
                    .map(|l| Span {
                        start: l.start,
                        end: l.end,
                        id: &l.entity_id,
                        class: l.entity_class,
                        method: l.method.as_str(),
                    })
                    .collect();
                let _ = writeln!(out, "<p class=\"draft\">{}</p>", annotate(&p.text, spans));
            }
            Provenance::KgBackground => {
                let cites: BTreeSet<String> = p
                    .sentences
                    .iter()
                    .flat_map(|s| {
                        s.slots
                            .values()
                            .map(|c| c.citation.label())
                            .chain(s.supports.iter().map(Citation::label))
                    })
                    .collect();
                let spans = p
                    .sentences
                    .iter()
                    .flat_map(|s| s.entities.iter())
                    .map(|e| Span {
                        start: e.start,
                        end: e.end,
                        id: &e.entity_id,
                        class: e.entity_class,
                        method: "kg",
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "<p class=\"kg-background\" data-citations=\"{}\">{}</p>",
                    html_escape(&cites.into_iter().collect::<Vec<_>>().join(" ")),
                    annotate(&p.text, spans)
                );
            }
        }
    }
    out.push_str("</article>\n");
    let payload = serde_json::to_string(&article.payloads)
        .expect("payloads serialize")
        .replace("</", "<\\/");
    let _ = writeln!(
        out,
        "<script type=\"application/json\" id=\"kg-payload\">{payload}</script>"
    );
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_examples() {
        assert_eq!(name_similarity("LeBron James", "LeBron James"), 1.0);
        assert!((name_similarity("LeBrom James", "LeBron James") - 11.0 / 12.0).abs() < 1e-12);
        assert_eq!(name_similarity("", ""), 1.0);
        assert_eq!(name_similarity("abc", "xyz"), 0.0);
    }

    #[test]
    fn numbers_are_found() {
        assert_eq!(
            numeric_tokens("met 2 times since 2019-01-05, 33,000."),
            vec!["2", "2019", "01", "05", "33,000"]
        );
    }

    #[test]
    fn escaping() {
        assert_eq!(html_escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
        let s = annotate(
            "X & Y",
            vec![Span {
                start: 4,
                end: 5,
                id: "y",
                class: EntityClass::Team,
                method: "exact",
            }],
        );
        assert!(s.starts_with("X &amp; <span"));
    }

    #[test]
    fn bundled_background_parses() {
        let t = BackgroundTemplates::bundled();
        assert!(t.templates.contains_key("HEAD_TO_HEAD"));
        assert!(t.templates.contains_key("career_points"));
    }

    #[test]
    fn unknown_policy_relation() {
        let p = EnrichPolicy {
            neighborhood_relations: vec!["COACHES".into()],
            ..EnrichPolicy::default()
        };
        assert!(matches!(p.relations(), Err(EnrichError::UnknownRelation(r)) if r == "COACHES"));
    }
}
