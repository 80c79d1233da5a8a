use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::graph::NodeLabel;
use super::{Modifier, QueryForm, QueryTemplate, SparqlError, Term};

/// A template slot: `ent_<i>` for the i-th entity node, `pred_<i>` for the
/// i-th edge, both in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Placeholder {
    Entity(usize),
    Predicate(usize),
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placeholder::Entity(i) => write!(f, "ent_{i}"),
            Placeholder::Predicate(i) => write!(f, "pred_{i}"),
        }
    }
}

pub type Binding = BTreeMap<Placeholder, Term>;

fn node_text(t: &QueryTemplate, binding: &Binding, node: usize) -> Result<String, SparqlError> {
    match t.graph.nodes[node] {
        NodeLabel::Entity => {
            let ph = Placeholder::Entity(t.entity_index(node).expect("entity node"));
            match binding.get(&ph) {
                Some(term @ (Term::Iri(_) | Term::Literal(_))) => Ok(term.to_string()),
                Some(Term::Variable(_)) => Err(SparqlError::InvalidBinding(ph)),
                None => Err(SparqlError::MissingBinding(ph)),
            }
        }
        _ => Ok(format!("?{}", t.variable_name(node).expect("variable node"))),
    }
}

/// Renders a template as an executable query. Variables are named `?uri`
/// for the answer and `?x<k>` for the others; modifiers refer to them by
/// those names.
pub fn instantiate(
    t: &QueryTemplate,
    binding: &Binding,
    form: QueryForm,
    mods: &[Modifier],
) -> Result<String, SparqlError> {
    let mut body = String::new();
    for (i, e) in t.graph.edges.iter().enumerate() {
        let subject = node_text(t, binding, e.from)?;
        let object = node_text(t, binding, e.to)?;
        let ph = Placeholder::Predicate(i);
        let predicate = match binding.get(&ph) {
            Some(term @ Term::Iri(_)) => term.to_string(),
            Some(_) => return Err(SparqlError::InvalidBinding(ph)),
            None => return Err(SparqlError::MissingBinding(ph)),
        };
        let _ = write!(body, "{subject} {predicate} {object} . ");
    }
    // report missing entity bindings even for isolated nodes
    for node in t.entity_nodes() {
        node_text(t, binding, node)?;
    }
    for m in mods {
        if let Modifier::Filter { left, op, right } = m {
            let _ = write!(body, "FILTER({left} {} {right}) ", op.symbol());
        }
    }

    let mut out = String::new();
    match form {
        QueryForm::Ask => {
            let _ = write!(out, "ASK WHERE {{ {body}}}");
        }
        QueryForm::Select => {
            let answer = t.graph.answer_node().ok_or(SparqlError::NoAnswerVariable)?;
            let answer = t.variable_name(answer).expect("answer variable");
            let count = mods.iter().find_map(|m| match m {
                Modifier::Count { variable } => Some(variable.as_str()),
                _ => None,
            });
            match count {
                Some(v) => {
                    let _ = write!(out, "SELECT (COUNT(DISTINCT ?{v}) AS ?count) WHERE {{ {body}}}");
                }
                None => {
                    let _ = write!(out, "SELECT DISTINCT ?{answer} WHERE {{ {body}}}");
                }
            }
            for m in mods {
                if let Modifier::OrderBy { variable, descending } = m {
                    let dir = if *descending { "DESC" } else { "ASC" };
                    let _ = write!(out, " ORDER BY {dir}(?{variable})");
                }
            }
            for m in mods {
                if let Modifier::Limit(n) = m {
                    let _ = write!(out, " LIMIT {n}");
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::{canonicalize, parse_query, to_bgp_graph, CmpOp, Literal};

    fn template_of(q: &str) -> QueryTemplate {
        canonicalize(&to_bgp_graph(&parse_query(q).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn running_example() {
        let t = template_of("SELECT ?uri WHERE { <http://r/a> <http://p/b> ?uri }");
        let binding = Binding::from([
            (
                Placeholder::Entity(0),
                Term::iri("http://dbpedia.org/resource/Albert_Einstein"),
            ),
            (
                Placeholder::Predicate(0),
                Term::iri("http://dbpedia.org/ontology/doctoralAdvisor"),
            ),
        ]);
        let q = instantiate(&t, &binding, QueryForm::Select, &[]).unwrap();
        assert_eq!(
            q,
            "SELECT DISTINCT ?uri WHERE { <http://dbpedia.org/resource/Albert_Einstein> \
             <http://dbpedia.org/ontology/doctoralAdvisor> ?uri . }"
        );
    }

    #[test]
    fn missing_binding() {
        let t = template_of("SELECT ?uri WHERE { <http://r/a> <http://p/b> ?uri }");
        assert_eq!(
            instantiate(&t, &Binding::new(), QueryForm::Select, &[]).unwrap_err(),
            SparqlError::MissingBinding(Placeholder::Entity(0))
        );
    }

    #[test]
    fn modifiers_render_and_parse() {
        let t = template_of("SELECT ?uri WHERE { ?uri <http://p/c> <http://r/G> . ?uri <http://p/pop> ?n }");
        let binding = Binding::from([
            (Placeholder::Entity(0), Term::iri("http://r/Germany")),
            (Placeholder::Predicate(0), Term::iri("http://p/country")),
            (Placeholder::Predicate(1), Term::iri("http://p/population")),
        ]);
        let ordered = instantiate(
            &t,
            &binding,
            QueryForm::Select,
            &[
                Modifier::OrderBy {
                    variable: "x0".into(),
                    descending: true,
                },
                Modifier::Limit(1),
            ],
        )
        .unwrap();
        assert!(ordered.ends_with("ORDER BY DESC(?x0) LIMIT 1"), "{ordered}");
        let filtered = instantiate(
            &t,
            &binding,
            QueryForm::Select,
            &[Modifier::Filter {
                left: Term::var("x0"),
                op: CmpOp::Gt,
                right: Term::Literal(Literal::integer(1_000_000)),
            }],
        )
        .unwrap();
        for q in [&ordered, &filtered] {
            let back = template_of(q);
            assert_eq!(back.canonical_key, t.canonical_key);
        }
        let count = instantiate(
            &t,
            &binding,
            QueryForm::Select,
            &[Modifier::Count { variable: "uri".into() }],
        )
        .unwrap();
        assert!(parse_query(&count).unwrap().is_count());
        let ask = instantiate(&t, &binding, QueryForm::Ask, &[]).unwrap();
        assert_eq!(
            template_of(&ask).canonical_key,
            t.ask_projection().unwrap().canonical_key
        );
    }

    #[test]
    fn select_needs_answer_variable() {
        let t = template_of("ASK { <http://r/a> <http://p/b> <http://r/c> }");
        let binding = Binding::from([
            (Placeholder::Entity(0), Term::iri("http://r/a")),
            (Placeholder::Entity(1), Term::iri("http://r/c")),
            (Placeholder::Predicate(0), Term::iri("http://p/b")),
        ]);
        assert_eq!(
            instantiate(&t, &binding, QueryForm::Select, &[]).unwrap_err(),
            SparqlError::NoAnswerVariable
        );
        assert!(instantiate(&t, &binding, QueryForm::Ask, &[])
            .unwrap()
            .starts_with("ASK"));
    }
}
