use std::time::Duration;

use writers_room::provider::stub::{StubReply, StubServer};
use writers_room::provider::{
    Backoff, ChatMessage, ChatProvider, ChatTurnRequest, HttpChatProvider, ProviderError,
    RequestTag, Role, Step,
};
use writers_room::room::ProviderBinding;

fn provider(key: Option<&str>) -> HttpChatProvider {
    HttpChatProvider::new(key.map(String::from)).with_backoff(Backoff {
        initial: Duration::from_millis(1),
        max: Duration::from_millis(4),
        jitter: false,
    })
}

fn request(endpoint: &str, max_retries: u32) -> ChatTurnRequest {
    let mut binding = ProviderBinding::http_chat(endpoint, "phi-4");
    binding.max_retries = max_retries;
    ChatTurnRequest::new(
        binding,
        vec![
            ChatMessage::new(Role::System, "You are MM."),
            ChatMessage::new(Role::User, "Your turn."),
        ],
        RequestTag::new(Step::Consensus, 2, "MM"),
    )
    .unwrap()
}

#[test]
fn request_carries_messages_and_bearer_token() {
    let server = StubServer::fixed(StubReply::chat("ok")).unwrap();
    provider(Some("sekret"))
        .complete(&request(&server.endpoint(), 0))
        .unwrap();
    let seen = &server.requests()[0];
    assert_eq!(seen.authorization.as_deref(), Some("Bearer sekret"));
    let body = seen.json();
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "You are MM.");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["model"], "phi-4");
}

#[test]
fn no_key_sends_no_authorization() {
    let server = StubServer::fixed(StubReply::chat("ok")).unwrap();
    provider(None)
        .complete(&request(&server.endpoint(), 0))
        .unwrap();
    assert_eq!(server.requests()[0].authorization, None);
}

#[test]
fn client_errors_are_not_retried() {
    let server = StubServer::fixed(StubReply::status(401)).unwrap();
    let err = provider(None)
        .complete(&request(&server.endpoint(), 3))
        .unwrap_err();
    assert!(
        matches!(err, ProviderError::Rejected { status: 401, .. }),
        "{err:?}"
    );
    assert_eq!(server.hits(), 1);
}

#[test]
fn rate_limit_is_retried() {
    let server = StubServer::start(vec![StubReply::status(429)], StubReply::chat("later")).unwrap();
    let done = provider(None)
        .complete(&request(&server.endpoint(), 1))
        .unwrap();
    assert_eq!(done.attempts, 2);
}

#[test]
fn malformed_body_is_protocol_error() {
    let server = StubServer::fixed(StubReply::Raw {
        status: 200,
        body: "{\"choices\": []}".into(),
    })
    .unwrap();
    let err = provider(None)
        .complete(&request(&server.endpoint(), 3))
        .unwrap_err();
    assert!(matches!(err, ProviderError::Protocol(_)), "{err:?}");
    assert_eq!(server.hits(), 1);
}

#[test]
fn zero_retries_means_one_attempt() {
    let server = StubServer::fixed(StubReply::status(502)).unwrap();
    let err = provider(None)
        .complete(&request(&server.endpoint(), 0))
        .unwrap_err();
    assert!(matches!(
        err,
        ProviderError::Unavailable { attempts: 1, .. }
    ));
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let endpoint = {
        let server = StubServer::fixed(StubReply::chat("gone")).unwrap();
        server.endpoint()
    };
    let err = provider(None).complete(&request(&endpoint, 1)).unwrap_err();
    assert!(
        matches!(err, ProviderError::Unavailable { attempts: 2, .. }),
        "{err:?}"
    );
}

#[test]
fn scripted_binding_is_refused() {
    let mut req = request("http://127.0.0.1:9/", 0);
    req.binding = ProviderBinding::scripted("phi-4");
    assert!(matches!(
        provider(None).complete(&req),
        Err(ProviderError::InvalidRequest(_))
    ));
}
