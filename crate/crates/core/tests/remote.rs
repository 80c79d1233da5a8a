mod common;

use std::time::Duration;

use common::stub::stub;
use kgqa_core::store::remote::{RemoteEndpoint, RemoteError};
use kgqa_core::store::AnswerKind;

const SELECT_ONE: &str = r#"{"head":{"vars":["uri"]},"results":{"bindings":[
    {"uri":{"type":"uri","value":"http://dbpedia.org/resource/Alfred_Kleiner"}}]}}"#;
const COUNT: &str = r#"{"head":{"vars":["count"]},"results":{"bindings":[
    {"count":{"type":"literal","datatype":"http://www.w3.org/2001/XMLSchema#integer","value":"3"}}]}}"#;
const ASK: &str = r#"{"head":{},"boolean":true}"#;

fn endpoint(url: &str, timeout_ms: u64) -> RemoteEndpoint {
    RemoteEndpoint::new(url, Duration::from_millis(timeout_ms)).unwrap()
}

#[test]
fn select_document_gives_resources() {
    let s = stub(200, SELECT_ONE, Duration::ZERO);
    let query = "SELECT DISTINCT ?uri WHERE { <http://a> <http://p> ?uri . }";
    let a = endpoint(&s.url, 5000).execute(query, false).unwrap();
    assert_eq!(a.kind, AnswerKind::Resources);
    assert_eq!(a.to_strings(), vec!["http://dbpedia.org/resource/Alfred_Kleiner"]);
    let bodies = s.bodies.lock().unwrap();
    assert_eq!(bodies.len(), 1);
    assert!(bodies[0].starts_with("query=SELECT"), "{}", bodies[0]);
}

#[test]
fn count_and_ask() {
    let count = stub(200, COUNT, Duration::ZERO);
    let a = endpoint(&count.url, 5000)
        .execute("SELECT (COUNT(?x) AS ?count) WHERE { ?x ?p ?o }", true)
        .unwrap();
    assert_eq!(a.to_strings(), vec!["3"]);
    let ask = stub(200, ASK, Duration::ZERO);
    let a = endpoint(&ask.url, 5000).execute("ASK { ?x ?p ?o }", false).unwrap();
    assert_eq!(a.as_bool(), Some(true));
}

#[test]
fn server_error_is_transport() {
    let s = stub(503, "unavailable", Duration::ZERO);
    assert!(matches!(
        endpoint(&s.url, 5000).execute("ASK { ?x ?p ?o }", false),
        Err(RemoteError::Transport(_))
    ));
}

#[test]
fn malformed_body() {
    let s = stub(200, "<html>not json</html>", Duration::ZERO);
    assert!(matches!(
        endpoint(&s.url, 5000).execute("ASK { ?x ?p ?o }", false),
        Err(RemoteError::MalformedResponse(_))
    ));
}

#[test]
fn slow_endpoint_times_out() {
    let s = stub(200, ASK, Duration::from_millis(1500));
    assert_eq!(
        endpoint(&s.url, 200).execute("ASK { ?x ?p ?o }", false),
        Err(RemoteError::Timeout)
    );
}

#[test]
fn unreachable_endpoint_is_transport() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/sparql", listener.local_addr().unwrap());
    drop(listener);
    assert!(matches!(
        endpoint(&url, 2000).execute("ASK { ?x ?p ?o }", false),
        Err(RemoteError::Transport(_))
    ));
}
