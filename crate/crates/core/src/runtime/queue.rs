use std::sync::mpsc;
use std::sync::{Arc, RwLock};
use std::thread;

use super::instance::{Applied, CommunityInstance, Event};
use super::snapshot::Snapshot;
use super::RuntimeError;

type Job = (Event, mpsc::Sender<Result<Applied, RuntimeError>>);

/// A community instance owned by its own event thread.
///
/// Any thread may submit events; they are applied one at a time in arrival
/// order. After each event the worker publishes a fresh snapshot, which
/// readers pick up without waiting on event application.
pub struct InstanceHandle {
    jobs: Option<mpsc::Sender<Job>>,
    published: Arc<RwLock<Arc<Snapshot>>>,
    worker: Option<thread::JoinHandle<CommunityInstance>>,
}

impl InstanceHandle {
    pub fn spawn(mut instance: CommunityInstance) -> Self {
        let published = Arc::new(RwLock::new(Arc::new(instance.snapshot())));
        let (tx, rx) = mpsc::channel::<Job>();
        let out = Arc::clone(&published);
        let worker = thread::spawn(move || {
            for (event, reply) in rx {
                let result = instance.apply(event);
                *out.write().expect("snapshot lock poisoned") = Arc::new(instance.snapshot());
                // the submitter may have stopped waiting
                let _ = reply.send(result);
            }
            instance
        });
        Self {
            jobs: Some(tx),
            published,
            worker: Some(worker),
        }
    }

    /// Queues an event; the receiver yields its result once applied.
    pub fn submit(&self, event: Event) -> mpsc::Receiver<Result<Applied, RuntimeError>> {
        let (tx, rx) = mpsc::channel();
        self.jobs
            .as_ref()
            .expect("handle is live until shutdown")
            .send((event, tx))
            .expect("event thread exited early");
        rx
    }

    pub fn apply(&self, event: Event) -> Result<Applied, RuntimeError> {
        self.submit(event).recv().expect("event thread exited early")
    }

    /// The most recently published snapshot.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.published.read().expect("snapshot lock poisoned"))
    }

    /// Drains the queue and hands back the instance.
    pub fn shutdown(mut self) -> CommunityInstance {
        self.jobs.take();
        self.worker
            .take()
            .expect("worker joined once")
            .join()
            .expect("event thread panicked")
    }
}

impl Drop for InstanceHandle {
    fn drop(&mut self) {
        self.jobs.take();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
