package worker

import "sync"

type Job func() error

type Pool interface {
	Submit(Job)
	Wait() []error
}

type pool struct {
	wg   sync.WaitGroup
	mu   sync.Mutex
	errs []error
}

func NewPool() Pool { return &pool{} }

func (p *pool) Submit(j Job) {
	p.wg.Add(1)
	go func() {
		defer p.wg.Done()
		if err := j(); err != nil {
			p.mu.Lock()
			p.errs = append(p.errs, err)
			p.mu.Unlock()
		}
	}()
}

func (p *pool) Wait() []error {
	p.wg.Wait()
	return p.errs
}
