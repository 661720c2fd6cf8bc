//! Interlinear text: sentence units holding tiers of cells. A type
//! configuration says which types dominate which (a word owns its
//! morphemes) and which types form equivalence classes. All members of a
//! class live on one cell as parallel texts, so they split and join
//! together.
//!
//! Cells of a class are grouped under the class's first member, the group
//! key. Groups dominate groups; a cell owns, per dominated group, an ordered
//! run of child cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::formats::FormatError;
use crate::graph::{id_number, AnnotationGraph, FeatureMap};
use crate::time::{Region, TimeOffset};

pub const UNIT_KIND: &str = "unit";
pub const CONFIG_KIND: &str = "type-config";
pub const ALIGN_KIND: &str = "align";
/// Feature of a unit annotation holding the free translation.
pub const TRANSLATION: &str = "FT";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IlError {
    #[error("nothing selected")]
    NoCurrent,
    #[error("text offset {0} is past the end of the text")]
    BadTextOffset(usize),
    #[error("split point {0} is not strictly inside the cell's region")]
    SplitPointOutOfRange(TimeOffset),
    #[error("no preceding cell under the same parent")]
    NoPreviousSibling,
    #[error("bad region {0} > {1}")]
    BadRegion(TimeOffset, TimeOffset),
    #[error("region falls outside the parent's region")]
    OutsideParent,
    #[error("an aligned child would fall outside the region")]
    ChildrenOutside,
    #[error("unknown type {0:?}")]
    UnknownType(String),
    #[error("no unit or cell {0}")]
    UnknownItem(String),
    #[error("{parent} does not dominate {child}")]
    NotDominated { parent: String, child: String },
    #[error("bad type configuration: {0}")]
    BadConfig(String),
}

impl IlError {
    pub fn code(&self) -> &'static str {
        match self {
            IlError::NoCurrent => "NoCurrent",
            IlError::BadTextOffset(_) => "BadTextOffset",
            IlError::SplitPointOutOfRange(_) => "SplitPointOutOfRange",
            IlError::NoPreviousSibling => "NoPreviousSibling",
            IlError::BadRegion(..) => "BadRegion",
            IlError::OutsideParent => "OutsideParent",
            IlError::ChildrenOutside => "ChildrenOutside",
            IlError::UnknownType(_) => "UnknownType",
            IlError::UnknownItem(_) => "UnknownItem",
            IlError::NotDominated { .. } => "NotDominated",
            IlError::BadConfig(_) => "BadConfig",
        }
    }
}

fn cfg_err(m: impl Into<String>) -> IlError {
    IlError::BadConfig(m.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeConfig {
    types: Vec<String>,
    dominates: Vec<(String, String)>,
    classes: Vec<Vec<String>>,
    separators: BTreeMap<String, String>,
    group_of: HashMap<String, String>,
}

impl Default for TypeConfig {
    /// Words over morphemes, with each morpheme carrying a gloss.
    fn default() -> Self {
        TypeConfig::new(
            &["WD", "MP", "MP-GLOSS"],
            &[("WD", "MP"), ("WD", "MP-GLOSS")],
            &[&["MP", "MP-GLOSS"]],
            &[],
        )
        .expect("valid default")
    }
}

impl TypeConfig {
    pub fn new(
        types: &[&str],
        dominates: &[(&str, &str)],
        classes: &[&[&str]],
        separators: &[(&str, &str)],
    ) -> Result<Self, IlError> {
        let types: Vec<String> = types.iter().map(|t| t.to_string()).collect();
        let known: BTreeSet<&str> = types.iter().map(String::as_str).collect();
        if known.len() != types.len() {
            return Err(cfg_err("duplicate type"));
        }
        for t in &types {
            if t.is_empty() || t.contains(|c: char| c.is_whitespace() || c == '=' || c == '>') {
                return Err(cfg_err(format!("bad type name {t:?}")));
            }
            if [UNIT_KIND, CONFIG_KIND, ALIGN_KIND].contains(&t.as_str()) {
                return Err(cfg_err(format!("type name {t:?} is reserved")));
            }
        }
        let check = |t: &str| if known.contains(t) { Ok(()) } else { Err(IlError::UnknownType(t.to_string())) };
        let mut group_of: HashMap<String, String> = types.iter().map(|t| (t.clone(), t.clone())).collect();
        let mut class_list = Vec::new();
        let mut in_class = BTreeSet::new();
        for class in classes {
            let Some(key) = class.first() else { continue };
            for m in *class {
                check(m)?;
                if !in_class.insert(*m) {
                    return Err(cfg_err(format!("{m} is in two equivalence classes")));
                }
                group_of.insert(m.to_string(), key.to_string());
            }
            class_list.push(class.iter().map(|m| m.to_string()).collect::<Vec<_>>());
        }
        let mut dom = Vec::new();
        for (p, c) in dominates {
            check(p)?;
            check(c)?;
            if !dom.contains(&(p.to_string(), c.to_string())) {
                dom.push((p.to_string(), c.to_string()));
            }
        }
        let mut separators_map = BTreeMap::new();
        for (t, s) in separators {
            check(t)?;
            separators_map.insert(t.to_string(), s.to_string());
        }
        let config = TypeConfig { types, dominates: dom, classes: class_list, separators: separators_map, group_of };
        config.check_dominance()?;
        Ok(config)
    }

    fn check_dominance(&self) -> Result<(), IlError> {
        // Lift every type's parents and children to groups; class members
        // must agree.
        let mut parents: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        let mut children: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for (p, c) in &self.dominates {
            let (gp, gc) = (self.group(p), self.group(c));
            if gp == gc {
                return Err(cfg_err(format!("{p} and {c} share a group and cannot dominate each other")));
            }
            parents.entry(c).or_default().insert(gp);
            children.entry(p).or_default().insert(gc);
        }
        for t in &self.types {
            let key = self.group(t);
            let same = |m: &HashMap<&str, BTreeSet<&str>>| m.get(t.as_str()) == m.get(key);
            if !same(&parents) || !same(&children) {
                return Err(cfg_err(format!("{t} and {key} are equivalent but dominated differently")));
            }
            if parents.get(t.as_str()).is_some_and(|p| p.len() > 1) {
                return Err(cfg_err(format!("{t} has more than one dominating group")));
            }
        }
        // Each group has at most one parent group, so walking up must end.
        for g in self.groups() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(g);
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return Err(cfg_err("dominance is cyclic"));
                }
                cur = self.parent_group(c);
            }
        }
        Ok(())
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    /// Group key of a type.
    pub fn group<'a>(&'a self, ty: &'a str) -> &'a str {
        self.group_of.get(ty).map_or(ty, String::as_str)
    }

    /// Group keys in type order.
    pub fn groups(&self) -> Vec<&str> {
        self.types.iter().filter(|t| self.group(t) == t.as_str()).map(String::as_str).collect()
    }

    /// Types sharing a cell with `group`, key first.
    pub fn members<'a>(&'a self, group: &'a str) -> Vec<&'a str> {
        match self.classes.iter().find(|c| c[0] == group) {
            Some(c) => c.iter().map(String::as_str).collect(),
            None => vec![self.types.iter().find(|t| *t == group).map_or(group, String::as_str)],
        }
    }

    pub fn parent_group(&self, group: &str) -> Option<&str> {
        self.dominates.iter().find(|(_, c)| self.group(c) == group).map(|(p, _)| self.group(p))
    }

    pub fn child_groups(&self, group: &str) -> Vec<&str> {
        self.groups().into_iter().filter(|g| self.parent_group(g) == Some(group)).collect()
    }

    pub fn top_groups(&self) -> Vec<&str> {
        self.groups().into_iter().filter(|g| self.parent_group(g).is_none()).collect()
    }

    /// Text placed between joined cells of `group`; empty unless configured.
    pub fn separator(&self, group: &str) -> &str {
        self.separators.get(group).map_or("", String::as_str)
    }

    fn is_group(&self, g: &str) -> bool {
        self.group_of.get(g).is_some_and(|k| k == g)
    }

    fn to_features(&self) -> FeatureMap {
        let mut f = FeatureMap::new();
        f.insert("types", self.types.join(" ")).expect("fixed name");
        let dom: Vec<String> = self.dominates.iter().map(|(p, c)| format!("{p}>{c}")).collect();
        f.insert("dominates", dom.join(" ")).expect("fixed name");
        let eq: Vec<String> = self.classes.iter().map(|c| c.join("=")).collect();
        f.insert("equiv", eq.join(" ")).expect("fixed name");
        for (t, s) in &self.separators {
            f.insert(format!("sep:{t}"), s.as_str()).expect("non-empty name");
        }
        f
    }

    fn from_pairs<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> Result<Self, IlError> {
        let mut types = Vec::new();
        let mut dom = Vec::new();
        let mut classes: Vec<Vec<&str>> = Vec::new();
        let mut seps = Vec::new();
        for (k, v) in pairs {
            match k {
                "types" => types = v.split_whitespace().collect(),
                "dominates" => {
                    for pair in v.split_whitespace() {
                        dom.push(pair.split_once('>').ok_or_else(|| cfg_err(format!("bad dominance {pair:?}")))?);
                    }
                }
                "equiv" => classes = v.split_whitespace().map(|c| c.split('=').collect()).collect(),
                k => match k.strip_prefix("sep:") {
                    Some(t) => seps.push((t, v)),
                    None => return Err(cfg_err(format!("unknown setting {k:?}"))),
                },
            }
        }
        let class_refs: Vec<&[&str]> = classes.iter().map(Vec::as_slice).collect();
        TypeConfig::new(&types, &dom, &class_refs, &seps)
    }

    /// Reads `key=value` lines: `types`, `dominates` (`WD>MP ...`), `equiv`
    /// (`MP=MP-GLOSS ...`) and `sep:<type>`. Everything after the first `=`
    /// is the value; `#` lines are comments.
    pub fn parse_config(text: &str) -> Result<Self, IlError> {
        let mut pairs = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            pairs.push(line.split_once('=').ok_or_else(|| cfg_err(format!("line {line:?} has no '='")))?);
        }
        TypeConfig::from_pairs(pairs.into_iter())
    }

    pub fn emit_config(&self) -> String {
        self.to_features().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Id of a unit or cell; rendered `e<n>`, the id of its annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IlId(pub u64);

impl fmt::Display for IlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl std::str::FromStr for IlId {
    type Err = IlError;

    fn from_str(s: &str) -> Result<Self, IlError> {
        id_number(s, 'e').map(IlId).ok_or_else(|| IlError::UnknownItem(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Unit(IlId),
    Cell(IlId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub group: String,
    /// One text per class member, key first.
    pub texts: IndexMap<String, String>,
    pub region: Option<Region>,
    pub owner: Owner,
    pub children: IndexMap<String, Vec<IlId>>,
}

impl Cell {
    /// Text of the group key type.
    pub fn text(&self) -> &str {
        &self.texts[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub id: IlId,
    pub translation: String,
    pub tiers: IndexMap<String, Vec<IlId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Focus {
    Unit(IlId),
    Cell(IlId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlDoc {
    config: TypeConfig,
    units: Vec<Unit>,
    cells: BTreeMap<IlId, Cell>,
    current: Option<Focus>,
    next_id: u64,
}

fn char_split(s: &str, at: usize) -> (&str, &str) {
    let b = s.char_indices().nth(at).map_or(s.len(), |(b, _)| b);
    s.split_at(b)
}

fn join_with(a: &str, b: &str, sep: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a}{sep}{b}"),
    }
}

impl IlDoc {
    pub fn new(config: TypeConfig) -> Self {
        IlDoc { config, units: Vec::new(), cells: BTreeMap::new(), current: None, next_id: 1 }
    }

    pub fn config(&self) -> &TypeConfig {
        &self.config
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn cell(&self, id: IlId) -> Option<&Cell> {
        self.cells.get(&id)
    }

    pub fn cells(&self) -> impl Iterator<Item = (IlId, &Cell)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }

    pub fn current(&self) -> Option<Focus> {
        self.current
    }

    fn fresh(&mut self) -> IlId {
        let id = IlId(self.next_id);
        self.next_id += 1;
        id
    }

    fn unit_index(&self, id: IlId) -> Option<usize> {
        self.units.iter().position(|u| u.id == id)
    }

    pub fn add_unit(&mut self, translation: &str) -> IlId {
        let id = self.fresh();
        let tiers = self.config.top_groups().into_iter().map(|g| (g.to_string(), Vec::new())).collect();
        self.units.push(Unit { id, translation: translation.to_string(), tiers });
        self.current = Some(Focus::Unit(id));
        id
    }

    pub fn set_translation(&mut self, unit: IlId, text: &str) -> Result<(), IlError> {
        let i = self.unit_index(unit).ok_or_else(|| IlError::UnknownItem(unit.to_string()))?;
        self.units[i].translation = text.to_string();
        Ok(())
    }

    pub fn select(&mut self, id: IlId) -> Result<(), IlError> {
        self.current = Some(if self.cells.contains_key(&id) {
            Focus::Cell(id)
        } else if self.unit_index(id).is_some() {
            Focus::Unit(id)
        } else {
            return Err(IlError::UnknownItem(id.to_string()));
        });
        Ok(())
    }

    fn current_cell(&self) -> Result<IlId, IlError> {
        match self.current {
            Some(Focus::Cell(c)) => Ok(c),
            _ => Err(IlError::NoCurrent),
        }
    }

    fn siblings(&self, owner: Owner, group: &str) -> &Vec<IlId> {
        match owner {
            Owner::Unit(u) => &self.units[self.unit_index(u).expect("owner exists")].tiers[group],
            Owner::Cell(c) => &self.cells[&c].children[group],
        }
    }

    fn siblings_mut(&mut self, owner: Owner, group: &str) -> &mut Vec<IlId> {
        match owner {
            Owner::Unit(u) => {
                let i = self.unit_index(u).expect("owner exists");
                &mut self.units[i].tiers[group]
            }
            Owner::Cell(c) => &mut self.cells.get_mut(&c).expect("owner exists").children[group],
        }
    }

    /// Creates an empty cell of `group` under `owner`, with one empty child
    /// per dominated group, all the way down.
    fn new_cell(&mut self, group: &str, owner: Owner) -> IlId {
        let id = self.fresh();
        let texts = self.config.members(group).into_iter().map(|t| (t.to_string(), String::new())).collect();
        let child_groups: Vec<String> = self.config.child_groups(group).into_iter().map(str::to_string).collect();
        let mut children = IndexMap::new();
        for g in &child_groups {
            children.insert(g.clone(), Vec::new());
        }
        self.cells.insert(id, Cell { group: group.to_string(), texts, region: None, owner, children });
        for g in child_groups {
            let child = self.new_cell(&g, Owner::Cell(id));
            self.cells.get_mut(&id).expect("just inserted").children[g.as_str()].push(child);
        }
        id
    }

    /// With a cell selected, adds an empty sibling right after it. With a
    /// unit selected, adds the first cell of its first top tier.
    pub fn insert_cell_after(&mut self) -> Result<IlId, IlError> {
        let id = match self.current.ok_or(IlError::NoCurrent)? {
            Focus::Unit(u) => {
                let group = self.config.top_groups().first().ok_or_else(|| cfg_err("no top-level type"))?.to_string();
                let id = self.new_cell(&group, Owner::Unit(u));
                self.siblings_mut(Owner::Unit(u), &group).insert(0, id);
                id
            }
            Focus::Cell(c) => {
                let (group, owner) = {
                    let cell = &self.cells[&c];
                    (cell.group.clone(), cell.owner)
                };
                let id = self.new_cell(&group, owner);
                let sibs = self.siblings_mut(owner, &group);
                let at = sibs.iter().position(|s| *s == c).expect("cell is listed under its owner") + 1;
                sibs.insert(at, id);
                id
            }
        };
        self.current = Some(Focus::Cell(id));
        Ok(id)
    }

    /// Adds an empty cell of type `ty` at the front of the selected item's
    /// run of that type: a top tier for a unit, a dominated tier for a cell.
    pub fn insert_first_child(&mut self, ty: &str) -> Result<IlId, IlError> {
        if !self.config.group_of.contains_key(ty) {
            return Err(IlError::UnknownType(ty.to_string()));
        }
        let group = self.config.group(ty).to_string();
        let owner = match self.current.ok_or(IlError::NoCurrent)? {
            Focus::Unit(u) => Owner::Unit(u),
            Focus::Cell(c) => Owner::Cell(c),
        };
        let ok = match owner {
            Owner::Unit(_) => self.config.parent_group(&group).is_none(),
            Owner::Cell(c) => self.config.parent_group(&group) == Some(self.cells[&c].group.as_str()),
        };
        if !ok {
            let parent = match owner {
                Owner::Unit(_) => UNIT_KIND.to_string(),
                Owner::Cell(c) => self.cells[&c].group.clone(),
            };
            return Err(IlError::NotDominated { parent, child: group });
        }
        let id = self.new_cell(&group, owner);
        self.siblings_mut(owner, &group).insert(0, id);
        self.current = Some(Focus::Cell(id));
        Ok(id)
    }

    fn remove_subtree(&mut self, id: IlId) {
        if let Some(cell) = self.cells.remove(&id) {
            for kids in cell.children.into_values() {
                for k in kids {
                    self.remove_subtree(k);
                }
            }
        }
    }

    /// Removes the selected cell and everything it dominates.
    pub fn delete_cell(&mut self) -> Result<(), IlError> {
        let c = self.current_cell()?;
        let (group, owner) = (self.cells[&c].group.clone(), self.cells[&c].owner);
        let sibs = self.siblings_mut(owner, &group);
        let i = sibs.iter().position(|s| *s == c).expect("cell is listed under its owner");
        sibs.remove(i);
        let next = sibs.get(i).or_else(|| i.checked_sub(1).and_then(|p| sibs.get(p))).copied();
        self.remove_subtree(c);
        self.current = Some(match (next, owner) {
            (Some(n), _) => Focus::Cell(n),
            (None, Owner::Cell(p)) => Focus::Cell(p),
            (None, Owner::Unit(u)) => Focus::Unit(u),
        });
        Ok(())
    }

    /// Splits the selected cell at char `offset` of its key text. Class
    /// co-texts split at the same offset (clamped). Each dominated run is
    /// divided by cumulative text length; with `t` the region is cut at `t`,
    /// otherwise both halves are unaligned. The right half is new and
    /// becomes current.
    pub fn split_cell(&mut self, offset: usize, t: Option<TimeOffset>) -> Result<(IlId, IlId), IlError> {
        let c = self.current_cell()?;
        let cell = self.cells[&c].clone();
        if offset > cell.text().chars().count() {
            return Err(IlError::BadTextOffset(offset));
        }
        let regions = match t {
            None => (None, None),
            Some(t) => {
                let r = cell.region.filter(|r| r.strictly_inside(t)).ok_or(IlError::SplitPointOutOfRange(t))?;
                (Some(Region::new(r.start(), t).expect("t inside")), Some(Region::new(t, r.end()).expect("t inside")))
            }
        };
        let mut left_kids = IndexMap::new();
        let mut right_kids = IndexMap::new();
        for (g, kids) in &cell.children {
            let sep = self.config.separator(g).chars().count();
            let mut boundary = 0;
            let mut split = kids.len();
            for (k, kid) in kids.iter().enumerate() {
                boundary += self.cells[kid].text().chars().count() + if k > 0 { sep } else { 0 };
                if boundary > offset {
                    split = k;
                    break;
                }
            }
            let (l, r) = kids.split_at(split);
            for (half, region) in [(l, regions.0), (r, regions.1)] {
                if let Some(region) = region {
                    if half.iter().any(|k| self.cells[k].region.is_some_and(|kr| !region.contains(&kr))) {
                        return Err(IlError::OutsideParent);
                    }
                }
            }
            left_kids.insert(g.clone(), l.to_vec());
            right_kids.insert(g.clone(), r.to_vec());
        }
        let mut left_texts = IndexMap::new();
        let mut right_texts = IndexMap::new();
        for (ty, text) in &cell.texts {
            let (a, b) = char_split(text, offset);
            left_texts.insert(ty.clone(), a.trim_end().to_string());
            right_texts.insert(ty.clone(), b.trim_start().to_string());
        }
        let right = self.fresh();
        for kid in right_kids.values().flatten() {
            self.cells.get_mut(kid).expect("child exists").owner = Owner::Cell(right);
        }
        let left = self.cells.get_mut(&c).expect("current exists");
        left.texts = left_texts;
        left.children = left_kids;
        left.region = regions.0;
        let right_cell = Cell {
            group: cell.group.clone(),
            texts: right_texts,
            region: regions.1,
            owner: cell.owner,
            children: right_kids,
        };
        self.cells.insert(right, right_cell);
        let sibs = self.siblings_mut(cell.owner, &cell.group);
        let at = sibs.iter().position(|s| *s == c).expect("cell is listed under its owner") + 1;
        sibs.insert(at, right);
        self.current = Some(Focus::Cell(right));
        Ok((c, right))
    }

    /// Merges the selected cell into its preceding sibling: texts joined
    /// with the group's separator, child runs concatenated, regions merged
    /// when both cells are aligned.
    pub fn join_cell(&mut self) -> Result<IlId, IlError> {
        let c = self.current_cell()?;
        let cur = self.cells[&c].clone();
        let sibs = self.siblings(cur.owner, &cur.group);
        let i = sibs.iter().position(|s| *s == c).expect("cell is listed under its owner");
        let prev_id = *i.checked_sub(1).and_then(|p| sibs.get(p)).ok_or(IlError::NoPreviousSibling)?;
        let sep = self.config.separator(&cur.group).to_string();
        for kid in cur.children.values().flatten() {
            self.cells.get_mut(kid).expect("child exists").owner = Owner::Cell(prev_id);
        }
        let prev = self.cells.get_mut(&prev_id).expect("sibling exists");
        for (ty, text) in &cur.texts {
            let joined = join_with(&prev.texts[ty.as_str()], text, &sep);
            prev.texts[ty.as_str()] = joined;
        }
        for (g, kids) in &cur.children {
            prev.children[g.as_str()].extend(kids.iter().copied());
        }
        prev.region = match (prev.region, cur.region) {
            (Some(a), Some(b)) => Some(a.hull(&b)),
            _ => None,
        };
        self.cells.remove(&c);
        self.siblings_mut(cur.owner, &cur.group).retain(|s| *s != c);
        self.current = Some(Focus::Cell(prev_id));
        Ok(prev_id)
    }

    fn parent_region(&self, cell: &Cell) -> Option<Region> {
        match cell.owner {
            Owner::Cell(p) => self.cells[&p].region,
            Owner::Unit(_) => None,
        }
    }

    pub fn align_cell(&mut self, start: TimeOffset, end: TimeOffset) -> Result<(), IlError> {
        let c = self.current_cell()?;
        let region = Region::new(start, end).map_err(|_| IlError::BadRegion(start, end))?;
        let cell = &self.cells[&c];
        if self.parent_region(cell).is_some_and(|p| !p.contains(&region)) {
            return Err(IlError::OutsideParent);
        }
        if cell.children.values().flatten().any(|k| self.cells[k].region.is_some_and(|kr| !region.contains(&kr))) {
            return Err(IlError::ChildrenOutside);
        }
        self.cells.get_mut(&c).expect("current exists").region = Some(region);
        Ok(())
    }

    pub fn set_text(&mut self, ty: &str, text: &str) -> Result<(), IlError> {
        let c = self.current_cell()?;
        let cell = self.cells.get_mut(&c).expect("current exists");
        let slot = cell.texts.get_mut(ty).ok_or_else(|| IlError::UnknownType(ty.to_string()))?;
        *slot = text.to_string();
        Ok(())
    }

    /// Cells of `group` in a unit, parent by parent in parent order.
    pub fn tier(&self, unit: IlId, group: &str) -> Vec<IlId> {
        let Some(u) = self.unit_index(unit) else { return Vec::new() };
        match self.config.parent_group(group) {
            None => self.units[u].tiers.get(group).cloned().unwrap_or_default(),
            Some(p) => {
                self.tier(unit, p).into_iter().flat_map(|pc| self.cells[&pc].children[group].clone()).collect()
            }
        }
    }

    /// Checks ownership links, class texts and region nesting.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        let mut visit = |id: IlId, owner: Owner, group: &str| -> Result<(), String> {
            let cell = self.cells.get(&id).ok_or(format!("{id} listed but missing"))?;
            if !seen.insert(id) {
                return Err(format!("{id} listed twice"));
            }
            if cell.owner != owner || cell.group != group {
                return Err(format!("{id} has the wrong owner or group"));
            }
            let members: Vec<&str> = cell.texts.keys().map(String::as_str).collect();
            if members != self.config.members(group) {
                return Err(format!("{id} texts {members:?} do not match its class"));
            }
            let kids: Vec<&str> = cell.children.keys().map(String::as_str).collect();
            if kids != self.config.child_groups(group) {
                return Err(format!("{id} child tiers {kids:?} do not match the configuration"));
            }
            if let (Some(r), Some(p)) = (cell.region, self.parent_region(cell)) {
                if !p.contains(&r) {
                    return Err(format!("{id} region {r} lies outside its parent's {p}"));
                }
            }
            Ok(())
        };
        let mut stack: Vec<(IlId, Owner, String)> = Vec::new();
        for u in &self.units {
            for (g, ids) in &u.tiers {
                stack.extend(ids.iter().map(|i| (*i, Owner::Unit(u.id), g.clone())));
            }
        }
        while let Some((id, owner, group)) = stack.pop() {
            visit(id, owner, &group)?;
            for (g, ids) in &self.cells[&id].children {
                stack.extend(ids.iter().map(|i| (*i, Owner::Cell(id), g.clone())));
            }
        }
        if seen.len() != self.cells.len() {
            return Err("unreachable cells".into());
        }
        Ok(())
    }

    fn width(&self, id: IlId) -> usize {
        let cell = &self.cells[&id];
        cell.children.values().map(|kids| kids.iter().map(|k| self.width(*k)).sum()).max().unwrap_or(0).max(1)
    }

    /// Encodes the document as one graph. Each unit owns a private run of
    /// untimed anchors; a cell spans as many anchors as its widest child
    /// tier needs (at least one), and children are laid out left to right
    /// from their parent's start. Alignments are `align` annotations on
    /// timed anchors.
    pub fn to_graph(&self) -> AnnotationGraph {
        let mut g = AnnotationGraph::new("il");
        let mut next = self.next_id;
        let mut derived = || {
            let id = format!("e{next}");
            next += 1;
            id
        };
        let a = g.add_anchor(None);
        g.add_annotation_with_id(&derived(), CONFIG_KIND, &a, &a, self.config.to_features()).expect("zero-length arc");
        let mut aligned = Vec::new();
        for u in &self.units {
            let w = u.tiers.values().map(|ids| ids.iter().map(|i| self.width(*i)).sum()).max().unwrap_or(0).max(1);
            let anchors: Vec<String> = (0..=w).map(|_| g.add_anchor(None)).collect();
            let f = FeatureMap::from_pairs([(TRANSLATION, u.translation.as_str())]).expect("fixed name");
            g.add_annotation_with_id(&u.id.to_string(), UNIT_KIND, &anchors[0], &anchors[w], f).expect("forward arc");
            let mut stack: Vec<(IlId, usize)> = Vec::new();
            for ids in u.tiers.values().rev() {
                let mut pos = 0;
                let mut row: Vec<(IlId, usize)> = Vec::new();
                for id in ids {
                    row.push((*id, pos));
                    pos += self.width(*id);
                }
                stack.extend(row.into_iter().rev());
            }
            while let Some((id, pos)) = stack.pop() {
                let cell = &self.cells[&id];
                let end = pos + self.width(id);
                let mut f = FeatureMap::new();
                for (ty, text) in &cell.texts {
                    f.insert(ty.as_str(), text.as_str()).expect("type names are non-empty");
                }
                g.add_annotation_with_id(&id.to_string(), cell.group.as_str(), &anchors[pos], &anchors[end], f)
                    .expect("forward arc");
                if cell.region.is_some() {
                    aligned.push(id);
                }
                for kids in cell.children.values().rev() {
                    let mut p = pos;
                    let mut row = Vec::new();
                    for k in kids {
                        row.push((*k, p));
                        p += self.width(*k);
                    }
                    stack.extend(row.into_iter().rev());
                }
            }
        }
        for id in aligned {
            let r = self.cells[&id].region.expect("aligned");
            let a = g.add_anchor(Some(r.start()));
            let b = g.add_anchor(Some(r.end()));
            let f = FeatureMap::from_pairs([("cell", id.to_string())]).expect("fixed name");
            g.add_annotation_with_id(&derived(), ALIGN_KIND, &a, &b, f).expect("ordered region");
        }
        g
    }

    pub fn from_graph(g: &AnnotationGraph) -> Result<Self, FormatError> {
        let bad = |reason: String| FormatError::BadDocument { kind: "interlinear", reason };
        let configs: Vec<_> = g.annotations().filter(|a| a.kind == CONFIG_KIND).collect();
        let [conf] = configs.as_slice() else {
            return Err(bad("expected exactly one type-config annotation".into()));
        };
        let config = TypeConfig::from_pairs(conf.features.iter()).map_err(|e| bad(e.to_string()))?;
        let next_id = id_number(&conf.id, 'e').ok_or_else(|| bad(format!("bad id {}", conf.id)))?;
        let pos: HashMap<&str, usize> = g.anchors().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
        let span = |a: &crate::graph::Annotation| -> Result<(usize, usize), FormatError> {
            match (pos.get(a.start.as_str()), pos.get(a.end.as_str())) {
                (Some(&s), Some(&e)) if s < e => Ok((s, e)),
                _ => Err(bad(format!("{} has no usable span", a.id))),
            }
        };
        let id_of = |s: &str| -> Result<IlId, FormatError> { s.parse().map_err(|_| bad(format!("bad id {s}"))) };

        let mut doc = IlDoc::new(config);
        doc.next_id = next_id;
        let mut spans: HashMap<IlId, (usize, usize)> = HashMap::new();
        let mut pending: Vec<(IlId, String, (usize, usize))> = Vec::new();
        let mut aligns = Vec::new();
        for a in g.annotations() {
            match a.kind.as_str() {
                CONFIG_KIND => {}
                ALIGN_KIND => aligns.push(a),
                UNIT_KIND => {
                    let id = id_of(&a.id)?;
                    spans.insert(id, span(a)?);
                    let translation = a.features.get(TRANSLATION).unwrap_or("").to_string();
                    let tiers = doc.config.top_groups().into_iter().map(|t| (t.to_string(), Vec::new())).collect();
                    doc.units.push(Unit { id, translation, tiers });
                }
                group if doc.config.is_group(group) => {
                    let id = id_of(&a.id)?;
                    let members = doc.config.members(group);
                    let names: Vec<&str> = a.features.iter().map(|(k, _)| k).collect();
                    if names != members {
                        return Err(bad(format!("{} carries features {names:?}, expected {members:?}", a.id)));
                    }
                    let texts = a.features.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
                    let children =
                        doc.config.child_groups(group).into_iter().map(|c| (c.to_string(), Vec::new())).collect();
                    let cell =
                        Cell { group: group.to_string(), texts, region: None, owner: Owner::Unit(IlId(0)), children };
                    doc.cells.insert(id, cell);
                    pending.push((id, group.to_string(), span(a)?));
                    spans.insert(id, span(a)?);
                }
                other => return Err(bad(format!("unexpected annotation type {other:?}"))),
            }
        }
        doc.units.sort_by_key(|u| spans[&u.id].0);
        pending.sort_by_key(|(_, _, s)| s.0);
        // Parents before children: walk groups from the top down.
        let mut order: Vec<&str> = Vec::new();
        let mut frontier = doc.config.top_groups();
        while let Some(gr) = frontier.first().copied() {
            frontier.remove(0);
            order.push(gr);
            frontier.extend(doc.config.child_groups(gr));
        }
        let groups: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        for group in &groups {
            let parent_group = doc.config.parent_group(group).map(str::to_string);
            for (id, _, (s, e)) in pending.iter().filter(|(_, g, _)| g == group) {
                let inside = |o: &IlId| spans[o].0 <= *s && *e <= spans[o].1;
                let owner = match &parent_group {
                    None => Owner::Unit(
                        doc.units.iter().map(|u| u.id).find(inside).ok_or_else(|| bad(format!("{id} is in no unit")))?,
                    ),
                    Some(pg) => Owner::Cell(
                        doc.cells
                            .iter()
                            .filter(|(_, c)| c.group == *pg)
                            .map(|(k, _)| *k)
                            .find(inside)
                            .ok_or_else(|| bad(format!("{id} is under no {pg} cell")))?,
                    ),
                };
                doc.cells.get_mut(id).expect("inserted above").owner = owner;
                match owner {
                    Owner::Unit(u) => {
                        let i = doc.unit_index(u).expect("found above");
                        doc.units[i].tiers[group.as_str()].push(*id);
                    }
                    Owner::Cell(p) => doc.cells.get_mut(&p).expect("found above").children[group.as_str()].push(*id),
                }
            }
        }
        for a in aligns {
            let target = id_of(a.features.get("cell").unwrap_or(""))?;
            let (Some(s), Some(e)) = (g.offset_of(&a.start), g.offset_of(&a.end)) else {
                return Err(bad(format!("{} is not timed", a.id)));
            };
            let region = Region::new(s, e).map_err(|_| bad(format!("{} runs backwards", a.id)))?;
            let cell = doc.cells.get_mut(&target).ok_or_else(|| bad(format!("{} aligns unknown {target}", a.id)))?;
            cell.region = Some(region);
        }
        doc.check_invariants().map_err(bad)?;
        Ok(doc)
    }
}
