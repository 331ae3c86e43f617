use std::collections::HashMap;

/// Placeholder for unknown forms and tags.
pub(crate) const UNK: &str = "<unk>";
/// Form and tag of the artificial root.
pub(crate) const ROOT: &str = "<root>";
/// Padding before the root and after the last word.
pub(crate) const BOS: &str = "<s>";
pub(crate) const EOS: &str = "</s>";

/// Bidirectional string/id map. Ids are dense and assigned in insertion order.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<String, u32>,
    items: Vec<String>,
    frozen: bool,
}

impl PartialEq for Interner {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Eq for Interner {}

impl Interner {
    pub fn from_items(items: Vec<String>) -> Self {
        let ids = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Interner {
            ids,
            items,
            frozen: true,
        }
    }

    /// Id of `item`, adding it unless the interner is frozen.
    pub fn intern(&mut self, item: &str) -> Option<u32> {
        if let Some(&id) = self.ids.get(item) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.items.len() as u32;
        self.ids.insert(item.to_string(), id);
        self.items.push(item.to_string());
        Some(id)
    }

    pub fn get(&self, item: &str) -> Option<u32> {
        self.ids.get(item).copied()
    }

    /// Id of `item`, or 0 (the UNK slot) when unknown.
    pub fn get_or_unk(&self, item: &str) -> usize {
        self.ids.get(item).map_or(0, |&i| i as usize)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Key of a sparse feature: template id followed by up to five vocabulary ids.
pub type FeatureKey = [u32; 6];

/// Dense ids for sparse feature keys.
#[derive(Clone, Debug, Default)]
pub struct FeatureIndex {
    ids: HashMap<FeatureKey, u32>,
    keys: Vec<FeatureKey>,
    frozen: bool,
}

impl PartialEq for FeatureIndex {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys
    }
}

impl Eq for FeatureIndex {}

impl FeatureIndex {
    pub fn from_keys(keys: Vec<FeatureKey>) -> Self {
        let ids = keys.iter().enumerate().map(|(i, k)| (*k, i as u32)).collect();
        FeatureIndex {
            ids,
            keys,
            frozen: true,
        }
    }

    pub fn intern(&mut self, key: FeatureKey) -> Option<u32> {
        if let Some(&id) = self.ids.get(&key) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.keys.len() as u32;
        self.ids.insert(key, id);
        self.keys.push(key);
        Some(id)
    }

    pub fn get(&self, key: &FeatureKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

impl super::Vocabularies {
    pub(crate) fn freeze(&mut self) {
        for v in [
            &mut self.forms,
            &mut self.pos,
            &mut self.labels,
            &mut self.pretrained,
        ] {
            v.freeze();
        }
        self.arc_features.freeze();
        self.label_features.freeze();
    }
}
