use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::OntologyError;

macro_rules! relations {
    ($($variant:ident => $name:literal,)*) => {
        /// The ConceptNet relations, plus `uri` for a concept's own identifier.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Relation {
            $($variant,)*
        }

        impl Relation {
            pub const ALL: &'static [Relation] = &[$(Relation::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Relation::$variant => $name,)*
                }
            }
        }
    };
}

relations! {
    RelatedTo => "relatedTo",
    FormOf => "formOf",
    IsA => "isA",
    PartOf => "partOf",
    HasA => "hasA",
    UsedFor => "usedFor",
    CapableOf => "capableOf",
    AtLocation => "atLocation",
    Causes => "causes",
    HasSubevent => "hasSubevent",
    HasFirstSubevent => "hasFirstSubevent",
    HasLastSubevent => "hasLastSubevent",
    HasPrerequisite => "hasPrerequisite",
    HasProperty => "hasProperty",
    MotivatedByGoal => "motivatedByGoal",
    ObstructedBy => "obstructedBy",
    Desires => "desires",
    CreatedBy => "createdBy",
    Synonym => "synonym",
    Antonym => "antonym",
    DistinctFrom => "distinctFrom",
    DerivedFrom => "derivedFrom",
    SymbolOf => "symbolOf",
    DefinedAs => "definedAs",
    MannerOf => "mannerOf",
    LocatedNear => "locatedNear",
    HasContext => "hasContext",
    SimilarTo => "similarTo",
    EtymologicallyRelatedTo => "etymologicallyRelatedTo",
    EtymologicallyDerivedFrom => "etymologicallyDerivedFrom",
    CausesDesire => "causesDesire",
    MadeOf => "madeOf",
    ReceivesAction => "receivesAction",
    ExternalUrl => "externalURL",
    InstanceOf => "instanceOf",
    Entails => "entails",
    Uri => "uri",
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.trim()
        .trim_start_matches("/r/")
        .chars()
        .filter(|c| *c != '_' && *c != '-' && *c != ' ')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Accepts `isA`, `IsA`, `/r/IsA` or `is_a`.
impl FromStr for Relation {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = squash(s);
        Relation::ALL
            .iter()
            .copied()
            .find(|r| squash(r.name()) == key)
            .ok_or_else(|| OntologyError::UnknownRelation(s.to_string()))
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_six_relations_plus_uri() {
        assert_eq!(Relation::ALL.len(), 37);
    }

    #[test]
    fn parse_variants() {
        for s in ["isA", "IsA", "/r/IsA", "is_a"] {
            assert_eq!(s.parse::<Relation>().unwrap(), Relation::IsA);
        }
        for r in Relation::ALL {
            assert_eq!(r.to_string().parse::<Relation>().unwrap(), *r);
        }
        assert!("likes".parse::<Relation>().is_err());
    }
}
