mod common;

use std::time::Duration;

use common::stub::{Reply, Stub};
use serde_json::json;
use tulun_core::backends::{BackendError, BackendProvider, ChatMessage, ConfiguredBackends, MtRequest, RetryPolicy};
use tulun_core::store::{LlmBackendConfig, LlmBackendKind, MtBackendConfig, MtBackendKind};

fn fast_retry() -> ConfiguredBackends {
    ConfiguredBackends::new(RetryPolicy {
        backoff: vec![Duration::from_millis(5), Duration::from_millis(5)],
    })
}

fn mt_config(stub: &Stub, token_env: &str) -> MtBackendConfig {
    MtBackendConfig {
        kind: MtBackendKind::HttpRemote,
        endpoint_url: Some(stub.url("/translate")),
        auth_token_env: token_env.into(),
        extra_params: [("model".to_string(), "opus-mt-en-tdt".to_string())].into(),
        ..Default::default()
    }
}

fn llm_config(stub: &Stub, token_env: &str) -> LlmBackendConfig {
    LlmBackendConfig {
        kind: LlmBackendKind::ChatHttp,
        endpoint_url: Some(stub.url("/v1/chat/completions")),
        model_id: "test-model".into(),
        auth_token_env: token_env.into(),
        ..Default::default()
    }
}

fn request(text: &str) -> MtRequest {
    MtRequest {
        source_text: text.into(),
        source_lang_name: "English".into(),
        target_lang_name: "Tetun".into(),
    }
}

fn messages() -> Vec<ChatMessage> {
    vec![ChatMessage::system("be brief"), ChatMessage::user("MT: foo")]
}

#[tokio::test]
async fn mt_contract_and_bearer_token() {
    std::env::set_var("TULUN_TEST_MT_TOKEN_A", "s3cret");
    let stub = Stub::start().await;
    stub.push(Reply::mt("Halo"));
    let mt = fast_retry().mt(&mt_config(&stub, "TULUN_TEST_MT_TOKEN_A")).unwrap();
    let out = mt.translate(&request("Hello")).await.unwrap();
    assert_eq!(out.translated_text, "Halo");

    let seen = stub.captured();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/translate");
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer s3cret"));
    assert_eq!(
        seen[0].body,
        json!({"text": "Hello", "source": "English", "target": "Tetun", "model": "opus-mt-en-tdt"})
    );
}

#[tokio::test]
async fn no_token_means_no_authorization_header() {
    let stub = Stub::start().await;
    stub.push(Reply::mt("x"));
    let mt = fast_retry().mt(&mt_config(&stub, "TULUN_TEST_UNSET_TOKEN")).unwrap();
    mt.translate(&request("y")).await.unwrap();
    assert_eq!(stub.captured()[0].authorization, None);
}

#[tokio::test]
async fn chat_contract_trims_content() {
    let stub = Stub::start().await;
    stub.push(Reply::chat("  bar \n"));
    let llm = fast_retry().llm(&llm_config(&stub, "")).unwrap();
    assert_eq!(llm.chat(&messages()).await.unwrap(), "bar");

    let body = &stub.captured()[0].body;
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
    assert_eq!(
        body["messages"],
        json!([{"role": "system", "content": "be brief"}, {"role": "user", "content": "MT: foo"}])
    );
}

#[tokio::test]
async fn server_errors_are_retried_twice() {
    let stub = Stub::start().await;
    stub.push(Reply::status(503, "busy")).push(Reply::status(502, "bad")).push(Reply::mt("ok"));
    let mt = fast_retry().mt(&mt_config(&stub, "")).unwrap();
    assert_eq!(mt.translate(&request("a")).await.unwrap().translated_text, "ok");
    assert_eq!(stub.captured().len(), 3);

    let stub = Stub::start().await;
    stub.fallback(Reply::status(500, "down"));
    let llm = fast_retry().llm(&llm_config(&stub, "")).unwrap();
    let err = llm.chat(&messages()).await.unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 500, .. }), "{err:?}");
    assert_eq!(stub.captured().len(), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let stub = Stub::start().await;
    stub.fallback(Reply::status(400, "{\"error\":\"bad\"}"));
    let mt = fast_retry().mt(&mt_config(&stub, "")).unwrap();
    let err = mt.translate(&request("a")).await.unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 400, .. }), "{err:?}");
    assert_eq!(stub.captured().len(), 1);
}

#[tokio::test]
async fn slow_backend_times_out() {
    let stub = Stub::start().await;
    stub.fallback(Reply::mt("late").delayed(Duration::from_millis(1500)));
    let config = MtBackendConfig {
        timeout_secs: 1,
        ..mt_config(&stub, "")
    };
    let mt = ConfiguredBackends::new(RetryPolicy::none()).mt(&config).unwrap();
    let err = mt.translate(&request("a")).await.unwrap_err();
    assert!(matches!(err, BackendError::Timeout { .. }), "{err:?}");
}

#[tokio::test]
async fn malformed_and_empty_responses() {
    let stub = Stub::start().await;
    stub.push(Reply::json(json!({"translation": "wrong key"})));
    let mt = fast_retry().mt(&mt_config(&stub, "")).unwrap();
    let err = mt.translate(&request("a")).await.unwrap_err();
    assert!(matches!(err, BackendError::Malformed { .. }), "{err:?}");

    let llm = fast_retry().llm(&llm_config(&stub, "")).unwrap();
    stub.push(Reply::json(json!({"choices": []})));
    assert!(matches!(llm.chat(&messages()).await, Err(BackendError::Malformed { .. })));
    stub.push(Reply::chat("   "));
    assert_eq!(llm.chat(&messages()).await, Err(BackendError::EmptyCompletion));
    stub.push(Reply::status(200, "not json"));
    assert!(matches!(llm.chat(&messages()).await, Err(BackendError::Malformed { .. })));
}

#[tokio::test]
async fn invalid_messages_never_reach_the_wire() {
    let stub = Stub::start().await;
    let llm = fast_retry().llm(&llm_config(&stub, "")).unwrap();
    assert!(matches!(llm.chat(&[]).await, Err(BackendError::InvalidRequest(_))));
    let misplaced = [ChatMessage::user("hi"), ChatMessage::system("late")];
    assert!(matches!(llm.chat(&misplaced).await, Err(BackendError::InvalidRequest(_))));
    assert!(stub.captured().is_empty());
}

#[tokio::test]
async fn unreachable_endpoint_is_a_network_error() {
    let config = MtBackendConfig {
        endpoint_url: Some("http://127.0.0.1:1/translate".into()),
        ..MtBackendConfig {
            kind: MtBackendKind::HttpRemote,
            ..Default::default()
        }
    };
    let mt = ConfiguredBackends::new(RetryPolicy::none()).mt(&config).unwrap();
    assert!(matches!(mt.translate(&request("a")).await, Err(BackendError::Network { .. })));
}

#[test]
fn remote_kind_requires_endpoint() {
    let config = MtBackendConfig {
        kind: MtBackendKind::HttpRemote,
        ..Default::default()
    };
    assert!(matches!(ConfiguredBackends::default().mt(&config), Err(BackendError::Config(_))));
}
