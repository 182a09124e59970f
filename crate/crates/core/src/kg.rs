//! Typed in-memory sports knowledge graph.
//!
//! Three entity classes (player, team, game), four relation types, a
//! declarative attribute schema, role tags for team leaders and stars, and
//! JSON persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SCHEMA_JSON: &str = include_str!("../data/schema.json");

#[derive(Debug, Error, PartialEq)]
pub enum KgError {
    #[error("unknown attribute {attribute:?} for class {class}")]
    UnknownAttribute {
        class: EntityClass,
        attribute: String,
    },
    #[error("attribute {attribute:?} of {entity}: {reason}")]
    InvalidAttribute {
        entity: String,
        attribute: String,
        reason: String,
    },
    #[error("alias {alias:?} already used by {existing}")]
    AliasCollision { alias: String, existing: String },
    #[error("entity {id} exists with class {existing}, cannot change to {requested}")]
    ClassChange {
        id: String,
        existing: EntityClass,
        requested: EntityClass,
    },
    #[error("dangling endpoint {0}")]
    DanglingEndpoint(String),
    #[error("signature violation: {relation} does not accept {head} -> {tail}")]
    Signature {
        relation: RelationType,
        head: EntityClass,
        tail: EntityClass,
    },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("{id} is a {class}, expected {expected}")]
    WrongClass {
        id: String,
        class: EntityClass,
        expected: EntityClass,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityClass {
    Player,
    Team,
    Game,
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityClass::Player => "PLAYER",
            EntityClass::Team => "TEAM",
            EntityClass::Game => "GAME",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelationType {
    /// Current club of a player.
    PlaysFor,
    /// Two teams that have met before.
    HistoricalMatchup,
    /// A team or player took part in a game.
    ParticipatedIn,
    /// A club the player used to play for.
    FormerTeam,
}

impl RelationType {
    pub const ALL: [RelationType; 4] = [
        RelationType::PlaysFor,
        RelationType::HistoricalMatchup,
        RelationType::ParticipatedIn,
        RelationType::FormerTeam,
    ];

    pub fn accepts(self, head: EntityClass, tail: EntityClass) -> bool {
        use EntityClass::*;
        match self {
            RelationType::PlaysFor | RelationType::FormerTeam => head == Player && tail == Team,
            RelationType::HistoricalMatchup => head == Team && tail == Team,
            RelationType::ParticipatedIn => matches!(head, Team | Player) && tail == Game,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::PlaysFor => "PLAYS_FOR",
            RelationType::HistoricalMatchup => "HISTORICAL_MATCHUP",
            RelationType::ParticipatedIn => "PARTICIPATED_IN",
            RelationType::FormerTeam => "FORMER_TEAM",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| KgError::Schema(format!("unknown relation type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(n) => write!(f, "{n}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

impl AttrValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            AttrValue::Number(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Text,
    Number,
    /// ISO-8601 calendar date, `YYYY-MM-DD`.
    Date,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub classes: BTreeMap<EntityClass, BTreeMap<String, AttrType>>,
}

impl Schema {
    pub fn bundled() -> Schema {
        serde_json::from_str(DEFAULT_SCHEMA_JSON).expect("bundled schema is valid")
    }

    pub fn from_json(text: &str) -> Result<Schema, KgError> {
        serde_json::from_str(text).map_err(|e| KgError::Schema(e.to_string()))
    }

    pub fn attribute_count(&self) -> usize {
        self.classes.values().map(BTreeMap::len).sum()
    }

    fn check_entity(&self, e: &Entity) -> Result<(), KgError> {
        let declared = self
            .classes
            .get(&e.class)
            .ok_or_else(|| KgError::Schema(format!("class {} not declared in schema", e.class)))?;
        for (name, value) in &e.attributes {
            let ty = declared
                .get(name)
                .ok_or_else(|| KgError::UnknownAttribute {
                    class: e.class,
                    attribute: name.clone(),
                })?;
            let bad = |reason: &str| KgError::InvalidAttribute {
                entity: e.id.clone(),
                attribute: name.clone(),
                reason: reason.to_owned(),
            };
            match (ty, value) {
                (AttrType::Number, AttrValue::Number(n)) if n.is_finite() => {}
                (AttrType::Number, _) => return Err(bad("expected a finite number")),
                (AttrType::Text, AttrValue::Text(_)) => {}
                (AttrType::Text, _) => return Err(bad("expected text")),
                (AttrType::Date, AttrValue::Text(s)) if is_iso_date(s) => {}
                (AttrType::Date, _) => return Err(bad("expected an ISO-8601 date")),
            }
        }
        if e.class == EntityClass::Player {
            match e.attributes.get("status").and_then(AttrValue::as_text) {
                Some("active") | Some("retired") => {}
                _ => {
                    return Err(KgError::InvalidAttribute {
                        entity: e.id.clone(),
                        attribute: "status".into(),
                        reason: "players need status active or retired".into(),
                    })
                }
            }
        }
        Ok(())
    }
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub class: EntityClass,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
    #[serde(default)]
    pub aliases: BTreeSet<String>,
}

impl Entity {
    pub fn new(id: &str, class: EntityClass) -> Self {
        Entity {
            id: id.to_owned(),
            class,
            attributes: BTreeMap::new(),
            aliases: BTreeSet::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: impl Into<AttrValue>) -> Self {
        self.attributes.insert(name.to_owned(), value.into());
        self
    }

    pub fn with_alias(mut self, alias: &str) -> Self {
        self.aliases.insert(alias.to_owned());
        self
    }

    /// The `name` attribute, falling back to the id.
    pub fn name(&self) -> &str {
        self.attributes
            .get("name")
            .and_then(AttrValue::as_text)
            .unwrap_or(&self.id)
    }

    /// Shortest alias if any, else the name. Used where prose wants "Lakers"
    /// rather than "Los Angeles Lakers".
    pub fn short_name(&self) -> &str {
        self.aliases
            .iter()
            .min_by_key(|a| (a.len(), a.as_str()))
            .map(String::as_str)
            .unwrap_or_else(|| self.name())
    }

    pub fn attr(&self, name: &str) -> Option<&AttrValue> {
        self.attributes.get(name)
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Text(s.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Text(s)
    }
}

impl From<f64> for AttrValue {
    fn from(n: f64) -> Self {
        AttrValue::Number(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: RelationType,
    pub tail: String,
}

impl Triple {
    pub fn new(head: &str, relation: RelationType, tail: &str) -> Self {
        Triple {
            head: head.to_owned(),
            relation,
            tail: tail.to_owned(),
        }
    }

    /// Stable citation id, `head|RELATION|tail`.
    pub fn id(&self) -> String {
        format!("{}|{}|{}", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Leader,
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TeamRoleTag {
    pub team: String,
    pub player: String,
    pub role: Role,
}

/// On-disk form of a store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDocument {
    pub schema: Schema,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub triples: Vec<Triple>,
    #[serde(default)]
    pub role_tags: Vec<TeamRoleTag>,
}

/// Entities, triples and tags without a schema; the input of `kg build`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphData {
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub triples: Vec<Triple>,
    #[serde(default)]
    pub role_tags: Vec<TeamRoleTag>,
}

/// In-memory knowledge graph. Reads may be shared across threads; mutation
/// needs `&mut self`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    schema: Schema,
    entities: BTreeMap<String, Entity>,
    triples: BTreeSet<Triple>,
    role_tags: Vec<TeamRoleTag>,
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        KnowledgeGraph::new(Schema::bundled())
    }
}

impl KnowledgeGraph {
    pub fn new(schema: Schema) -> Self {
        KnowledgeGraph {
            schema,
            entities: BTreeMap::new(),
            triples: BTreeSet::new(),
            role_tags: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entities_of(&self, class: EntityClass) -> impl Iterator<Item = &Entity> {
        self.entities.values().filter(move |e| e.class == class)
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains_triple(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn role_tags(&self) -> &[TeamRoleTag] {
        &self.role_tags
    }

    pub fn upsert_entity(&mut self, e: Entity) -> Result<String, KgError> {
        self.schema.check_entity(&e)?;
        if let Some(existing) = self.entities.get(&e.id) {
            if existing.class != e.class {
                return Err(KgError::ClassChange {
                    id: e.id.clone(),
                    existing: existing.class,
                    requested: e.class,
                });
            }
        }
        for alias in &e.aliases {
            if let Some(other) = self
                .entities_of(e.class)
                .find(|o| o.id != e.id && o.aliases.contains(alias))
            {
                return Err(KgError::AliasCollision {
                    alias: alias.clone(),
                    existing: other.id.clone(),
                });
            }
        }
        let id = e.id.clone();
        self.entities.insert(id.clone(), e);
        Ok(id)
    }

    fn require(&self, id: &str) -> Result<&Entity, KgError> {
        self.entities
            .get(id)
            .ok_or_else(|| KgError::UnknownEntity(id.to_owned()))
    }

    fn require_class(&self, id: &str, class: EntityClass) -> Result<&Entity, KgError> {
        let e = self.require(id)?;
        if e.class != class {
            return Err(KgError::WrongClass {
                id: id.to_owned(),
                class: e.class,
                expected: class,
            });
        }
        Ok(e)
    }

    pub fn add_triple(&mut self, t: Triple) -> Result<(), KgError> {
        let head = self
            .entities
            .get(&t.head)
            .ok_or_else(|| KgError::DanglingEndpoint(t.head.clone()))?;
        let tail = self
            .entities
            .get(&t.tail)
            .ok_or_else(|| KgError::DanglingEndpoint(t.tail.clone()))?;
        if !t.relation.accepts(head.class, tail.class) {
            return Err(KgError::Signature {
                relation: t.relation,
                head: head.class,
                tail: tail.class,
            });
        }
        self.triples.insert(t);
        Ok(())
    }

    pub fn add_role_tag(&mut self, tag: TeamRoleTag) -> Result<(), KgError> {
        self.require_class(&tag.team, EntityClass::Team)?;
        self.require_class(&tag.player, EntityClass::Player)?;
        if !self.role_tags.contains(&tag) {
            self.role_tags.push(tag);
        }
        Ok(())
    }

    /// Resolves a surface string to an entity of `class` by id, name or alias.
    pub fn resolve(&self, class: EntityClass, surface: &str) -> Option<&Entity> {
        if let Some(e) = self.entities.get(surface).filter(|e| e.class == class) {
            return Some(e);
        }
        self.entities_of(class)
            .find(|e| e.name() == surface)
            .or_else(|| self.find_by_alias(class, surface))
    }

    pub fn find_by_alias(&self, class: EntityClass, alias: &str) -> Option<&Entity> {
        self.entities_of(class).find(|e| e.aliases.contains(alias))
    }

    /// Players currently playing for `team`, sorted by id.
    pub fn roster(&self, team: &str) -> Result<Vec<&Entity>, KgError> {
        self.require_class(team, EntityClass::Team)?;
        Ok(self
            .triples
            .iter()
            .filter(|t| t.relation == RelationType::PlaysFor && t.tail == team)
            .filter_map(|t| self.entities.get(&t.head))
            .collect())
    }

    /// Tagged `(leaders, stars)` of a team, in tagging order.
    pub fn leaders(&self, team: &str) -> Result<(Vec<&Entity>, Vec<&Entity>), KgError> {
        self.require_class(team, EntityClass::Team)?;
        let tagged = |role: Role| {
            self.role_tags
                .iter()
                .filter(|t| t.team == team && t.role == role)
                .filter_map(|t| self.entities.get(&t.player))
                .collect::<Vec<_>>()
        };
        Ok((tagged(Role::Leader), tagged(Role::Star)))
    }

    /// Games between two teams in date order. A game counts if both teams
    /// participated in it, or if its home/away attributes name the pair.
    pub fn head_to_head(&self, a: &str, b: &str) -> Result<Vec<&Entity>, KgError> {
        self.require_class(a, EntityClass::Team)?;
        self.require_class(b, EntityClass::Team)?;
        if a == b {
            return Ok(Vec::new());
        }
        let games_of = |team: &str| -> BTreeSet<&str> {
            self.triples
                .iter()
                .filter(|t| t.relation == RelationType::ParticipatedIn && t.head == team)
                .map(|t| t.tail.as_str())
                .collect()
        };
        let mut ids: BTreeSet<&str> = games_of(a).intersection(&games_of(b)).copied().collect();
        for g in self.entities_of(EntityClass::Game) {
            let side = |k: &str| g.attr(k).and_then(AttrValue::as_text);
            if let (Some(h), Some(w)) = (side("home_team"), side("away_team")) {
                if (h == a && w == b) || (h == b && w == a) {
                    ids.insert(&g.id);
                }
            }
        }
        let mut games: Vec<&Entity> = ids
            .into_iter()
            .filter_map(|id| self.entities.get(id))
            .collect();
        games.sort_by(|x, y| {
            let date = |e: &Entity| {
                e.attr("date")
                    .and_then(AttrValue::as_text)
                    .unwrap_or("")
                    .to_owned()
            };
            date(x).cmp(&date(y)).then_with(|| x.id.cmp(&y.id))
        });
        Ok(games)
    }

    /// Triples touching `id`, in store order.
    pub fn incident(&self, id: &str) -> Vec<&Triple> {
        self.triples
            .iter()
            .filter(|t| t.head == id || t.tail == id)
            .collect()
    }

    pub fn to_document(&self) -> StoreDocument {
        StoreDocument {
            schema: self.schema.clone(),
            entities: self.entities.values().cloned().collect(),
            triples: self.triples.iter().cloned().collect(),
            role_tags: self.role_tags.clone(),
        }
    }

    pub fn from_document(doc: StoreDocument) -> Result<Self, KgError> {
        let mut kg = KnowledgeGraph::new(doc.schema);
        kg.extend(GraphData {
            entities: doc.entities,
            triples: doc.triples,
            role_tags: doc.role_tags,
        })?;
        Ok(kg)
    }

    pub fn extend(&mut self, data: GraphData) -> Result<(), KgError> {
        for e in data.entities {
            if self.entities.get(&e.id).is_some_and(|old| *old == e) {
                continue;
            }
            self.upsert_entity(e)?;
        }
        for t in data.triples {
            self.add_triple(t)?;
        }
        for tag in data.role_tags {
            self.add_role_tag(tag)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("store serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, KgError> {
        if text.trim().is_empty() {
            return Ok(KnowledgeGraph::default());
        }
        let doc: StoreDocument =
            serde_json::from_str(text).map_err(|e| KgError::Schema(e.to_string()))?;
        KnowledgeGraph::from_document(doc).map_err(|e| match e {
            KgError::Schema(_) => e,
            other => KgError::Schema(other.to_string()),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), KgError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| KgError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, KgError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KgError::Io(format!("{}: {e}", path.display())))?;
        KnowledgeGraph::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredCounts {
    pub classes: usize,
    pub relations: usize,
    pub attributes: usize,
}

/// Statistics of a store plus any schema violations found in it.
///
/// `classes`, `relations` and `attributes` count what the data actually uses:
/// entity classes with at least one entity, relation types with at least one
/// triple, and distinct `(class, attribute)` pairs set on some entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaReport {
    pub classes: usize,
    pub relations: usize,
    pub attributes: usize,
    pub entity_counts: BTreeMap<EntityClass, usize>,
    pub triple_count: usize,
    pub role_tag_count: usize,
    pub declared: DeclaredCounts,
    pub violations: Vec<String>,
}

impl SchemaReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_schema(kg: &KnowledgeGraph) -> SchemaReport {
    validate_document(&kg.to_document())
}

/// Lenient validation of a raw document: never fails, lists every problem.
pub fn validate_document(doc: &StoreDocument) -> SchemaReport {
    let mut report = SchemaReport {
        declared: DeclaredCounts {
            classes: doc.schema.classes.len(),
            relations: RelationType::ALL.len(),
            attributes: doc.schema.attribute_count(),
        },
        triple_count: doc.triples.len(),
        role_tag_count: doc.role_tags.len(),
        ..Default::default()
    };
    let v = &mut report.violations;

    let mut by_id: BTreeMap<&str, &Entity> = BTreeMap::new();
    let mut used_attrs: BTreeSet<(EntityClass, &str)> = BTreeSet::new();
    let mut aliases: BTreeMap<(EntityClass, &str), &str> = BTreeMap::new();
    for e in &doc.entities {
        if by_id.insert(&e.id, e).is_some() {
            v.push(format!("duplicate entity id {}", e.id));
        }
        *report.entity_counts.entry(e.class).or_default() += 1;
        if let Err(err) = doc.schema.check_entity(e) {
            v.push(format!("entity {}: {err}", e.id));
        }
        for name in e.attributes.keys() {
            used_attrs.insert((e.class, name));
        }
        for alias in &e.aliases {
            if let Some(other) = aliases.insert((e.class, alias), &e.id) {
                v.push(format!("alias {alias:?} shared by {other} and {}", e.id));
            }
        }
    }
    report.classes = report.entity_counts.len();
    report.attributes = used_attrs.len();

    let mut relations = BTreeSet::new();
    for t in &doc.triples {
        relations.insert(t.relation);
        match (by_id.get(t.head.as_str()), by_id.get(t.tail.as_str())) {
            (Some(h), Some(tl)) => {
                if !t.relation.accepts(h.class, tl.class) {
                    v.push(format!(
                        "triple {}: {} does not accept {} -> {}",
                        t.id(),
                        t.relation,
                        h.class,
                        tl.class
                    ));
                }
            }
            (h, tl) => {
                for (end, found) in [(&t.head, h.is_some()), (&t.tail, tl.is_some())] {
                    if !found {
                        v.push(format!("triple {}: dangling endpoint {end}", t.id()));
                    }
                }
            }
        }
    }
    report.relations = relations.len();

    let mut tagged_teams: BTreeMap<&str, bool> = BTreeMap::new();
    for tag in &doc.role_tags {
        let ok_team = by_id
            .get(tag.team.as_str())
            .is_some_and(|e| e.class == EntityClass::Team);
        let ok_player = by_id
            .get(tag.player.as_str())
            .is_some_and(|e| e.class == EntityClass::Player);
        if !ok_team || !ok_player {
            v.push(format!(
                "role tag {}/{} has a bad endpoint",
                tag.team, tag.player
            ));
        }
        *tagged_teams.entry(&tag.team).or_default() |= tag.role == Role::Leader;
    }
    for (team, has_leader) in tagged_teams {
        if !has_leader {
            v.push(format!("team {team} has role tags but no leader"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lakers() -> Entity {
        Entity::new("team:lakers", EntityClass::Team)
            .with_attr("name", "Los Angeles Lakers")
            .with_attr("partition", "West")
            .with_alias("Lakers")
    }

    fn player(id: &str, name: &str) -> Entity {
        Entity::new(id, EntityClass::Player)
            .with_attr("name", name)
            .with_attr("status", "active")
    }

    #[test]
    fn bundled_schema_declares_27_attributes() {
        let s = Schema::bundled();
        assert_eq!(s.classes.len(), 3);
        assert_eq!(s.attribute_count(), 27);
    }

    #[test]
    fn upsert_is_idempotent_and_checks_schema() {
        let mut kg = KnowledgeGraph::default();
        kg.upsert_entity(lakers()).unwrap();
        kg.upsert_entity(lakers()).unwrap();
        assert_eq!(kg.len(), 1);

        let bad = player("player:x", "X").with_attr("altitude", 2.0);
        assert!(matches!(
            kg.upsert_entity(bad),
            Err(KgError::UnknownAttribute { attribute, .. }) if attribute == "altitude"
        ));

        let clash = Entity::new("team:other", EntityClass::Team)
            .with_attr("name", "Other")
            .with_alias("Lakers");
        assert!(matches!(
            kg.upsert_entity(clash),
            Err(KgError::AliasCollision { .. })
        ));

        // same alias on another class is fine
        kg.upsert_entity(player("player:l", "L").with_alias("Lakers"))
            .unwrap();

        let no_status = Entity::new("player:y", EntityClass::Player).with_attr("name", "Y");
        assert!(matches!(
            kg.upsert_entity(no_status),
            Err(KgError::InvalidAttribute { .. })
        ));
    }

    #[test]
    fn reupsert_replaces_attributes() {
        let mut kg = KnowledgeGraph::default();
        kg.upsert_entity(lakers()).unwrap();
        kg.upsert_entity(lakers().with_attr("city", "Los Angeles"))
            .unwrap();
        assert_eq!(kg.len(), 1);
        assert_eq!(
            kg.entity("team:lakers").unwrap().attr("city"),
            Some(&AttrValue::Text("Los Angeles".into()))
        );
    }

    #[test]
    fn triples_respect_signatures() {
        let mut kg = KnowledgeGraph::default();
        kg.upsert_entity(lakers()).unwrap();
        kg.upsert_entity(player("player:lebron", "LeBron James"))
            .unwrap();
        kg.add_triple(Triple::new(
            "player:lebron",
            RelationType::PlaysFor,
            "team:lakers",
        ))
        .unwrap();
        kg.add_triple(Triple::new(
            "player:lebron",
            RelationType::PlaysFor,
            "team:lakers",
        ))
        .unwrap();
        assert_eq!(kg.triples().count(), 1);
        assert!(matches!(
            kg.add_triple(Triple::new(
                "team:lakers",
                RelationType::PlaysFor,
                "player:lebron"
            )),
            Err(KgError::Signature { .. })
        ));
        assert!(matches!(
            kg.add_triple(Triple::new(
                "player:ghost",
                RelationType::PlaysFor,
                "team:lakers"
            )),
            Err(KgError::DanglingEndpoint(_))
        ));
    }

    #[test]
    fn queries_on_small_graph() {
        let mut kg = KnowledgeGraph::default();
        kg.upsert_entity(lakers()).unwrap();
        kg.upsert_entity(
            Entity::new("team:celtics", EntityClass::Team).with_attr("name", "Boston Celtics"),
        )
        .unwrap();
        assert!(kg.roster("team:celtics").unwrap().is_empty());
        assert!(kg.roster("team:nope").is_err());
        assert_eq!(kg.leaders("team:celtics").unwrap(), (vec![], vec![]));
        assert!(kg.leaders("").is_err());
        assert!(kg
            .head_to_head("team:lakers", "team:lakers")
            .unwrap()
            .is_empty());
        assert!(kg
            .head_to_head("team:lakers", "team:celtics")
            .unwrap()
            .is_empty());
        assert_eq!(
            kg.resolve(EntityClass::Team, "Lakers").unwrap().id,
            "team:lakers"
        );
        assert_eq!(
            kg.resolve(EntityClass::Team, "Los Angeles Lakers")
                .unwrap()
                .id,
            "team:lakers"
        );
    }

    #[test]
    fn empty_and_bad_documents() {
        let kg = KnowledgeGraph::from_json("").unwrap();
        assert!(kg.is_empty());
        let report = validate_schema(&kg);
        assert_eq!(
            (report.classes, report.relations, report.attributes),
            (0, 0, 0)
        );
        assert!(report.is_valid());

        let mut doc = KnowledgeGraph::default().to_document();
        doc.entities.push(lakers());
        let mut json: serde_json::Value = serde_json::to_value(&doc).unwrap();
        json["triples"] = serde_json::json!([
            {"head": "team:lakers", "relation": "COACHED_BY", "tail": "team:lakers"}
        ]);
        assert!(matches!(
            KnowledgeGraph::from_json(&json.to_string()),
            Err(KgError::Schema(_))
        ));
    }

    #[test]
    fn dangling_triple_is_reported_not_fatal() {
        let mut doc = KnowledgeGraph::default().to_document();
        doc.entities.push(lakers());
        doc.triples.push(Triple::new(
            "player:ghost",
            RelationType::PlaysFor,
            "team:lakers",
        ));
        let report = validate_document(&doc);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].contains("dangling endpoint player:ghost"));
        assert!(KnowledgeGraph::from_document(doc).is_err());
    }
}
